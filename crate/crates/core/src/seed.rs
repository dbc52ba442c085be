//! Platform-stable seed derivation.
//!
//! Seeds for benchmark instances and per-trace optimizer runs are derived with
//! 64-bit FNV-1a over a length-prefixed byte stream, finished with the
//! SplitMix64 mixer. Both are fixed algorithms with no dependence on pointer
//! width, endianness of the host or the standard library's hasher, so the same
//! inputs give the same seed everywhere.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct StableHasher {
    state: u64,
}

impl Default for StableHasher {
    fn default() -> Self {
        Self::new()
    }
}

impl StableHasher {
    pub fn new() -> Self {
        StableHasher { state: FNV_OFFSET }
    }

    fn write_bytes(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.state ^= u64::from(*b);
            self.state = self.state.wrapping_mul(FNV_PRIME);
        }
    }

    pub fn str(mut self, s: &str) -> Self {
        self.write_bytes(&(s.len() as u64).to_le_bytes());
        self.write_bytes(s.as_bytes());
        self
    }

    pub fn u64(mut self, v: u64) -> Self {
        self.write_bytes(&v.to_le_bytes());
        self
    }

    pub fn finish(&self) -> u64 {
        splitmix64(self.state)
    }
}
