use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::BenchError;
use crate::seed::StableHasher;
use crate::trace::SearchDomain;

/// Function ids accepted by [`make_function`].
pub const FUNCTION_IDS: [&str; 10] = [
    "sphere",
    "ellipsoid",
    "rastrigin",
    "rosenbrock",
    "attractive_sector",
    "step_ellipsoid",
    "schaffers",
    "griewank_rosenbrock",
    "schwefel",
    "katsuura-lite",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionKind {
    Sphere,
    Ellipsoid,
    Rastrigin,
    Rosenbrock,
    AttractiveSector,
    StepEllipsoid,
    Schaffers,
    GriewankRosenbrock,
    Schwefel,
    KatsuuraLite,
}

impl FunctionKind {
    pub fn parse(id: &str) -> Result<Self, BenchError> {
        Ok(match id {
            "sphere" => FunctionKind::Sphere,
            "ellipsoid" => FunctionKind::Ellipsoid,
            "rastrigin" => FunctionKind::Rastrigin,
            "rosenbrock" => FunctionKind::Rosenbrock,
            "attractive_sector" => FunctionKind::AttractiveSector,
            "step_ellipsoid" => FunctionKind::StepEllipsoid,
            "schaffers" => FunctionKind::Schaffers,
            "griewank_rosenbrock" => FunctionKind::GriewankRosenbrock,
            "schwefel" => FunctionKind::Schwefel,
            "katsuura-lite" => FunctionKind::KatsuuraLite,
            other => return Err(BenchError::UnknownFunction(other.to_string())),
        })
    }

    pub fn id(self) -> &'static str {
        FUNCTION_IDS[self as usize]
    }
}

/// One instance of a test function: `f(x) = g(x - x_opt) + f_opt` with
/// `g(0) = 0`, so `f(x_opt) == f_opt` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkFunction {
    pub kind: FunctionKind,
    pub dim: usize,
    pub instance_id: u64,
    pub x_opt: Vec<f64>,
    pub f_opt: f64,
}

impl fmt::Display for BenchmarkFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}(d={}, i={})",
            self.kind.id(),
            self.dim,
            self.instance_id
        )
    }
}

/// Builds instance `instance_id` of `function_id`. The shift `x_opt` is
/// uniform in `[-4, 4]^d` and the offset `f_opt` uniform in `[-100, 100]`,
/// both drawn from a ChaCha8 stream seeded with the stable hash of
/// `(function_id, dim, instance_id)`.
pub fn make_function(
    function_id: &str,
    dim: usize,
    instance_id: u64,
) -> Result<BenchmarkFunction, BenchError> {
    let kind = FunctionKind::parse(function_id)?;
    if dim == 0 {
        return Err(BenchError::ZeroDimension);
    }
    if instance_id == 0 {
        return Err(BenchError::ZeroInstance);
    }
    let seed = StableHasher::new()
        .str(function_id)
        .u64(dim as u64)
        .u64(instance_id)
        .finish();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_opt = (0..dim).map(|_| rng.random_range(-4.0..=4.0)).collect();
    let f_opt = rng.random_range(-100.0..=100.0);
    Ok(BenchmarkFunction {
        kind,
        dim,
        instance_id,
        x_opt,
        f_opt,
    })
}

// Minimiser of -y sin(sqrt(|y|)) on [-500, 500].
const SCHWEFEL_Y_STAR: f64 = 420.968_746_359_982;

fn schwefel_term(y: f64) -> f64 {
    -y * y.abs().sqrt().sin()
}

fn conditioning(i: usize, d: usize, exponent: f64) -> f64 {
    if d == 1 {
        1.0
    } else {
        10f64.powf(exponent * i as f64 / (d - 1) as f64)
    }
}

impl BenchmarkFunction {
    pub fn id(&self) -> &'static str {
        self.kind.id()
    }

    pub fn domain(&self) -> SearchDomain {
        SearchDomain::cube(self.dim, -5.0, 5.0).expect("valid cube")
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let z: Vec<f64> = x.iter().zip(&self.x_opt).map(|(a, b)| a - b).collect();
        self.raw(&z) + self.f_opt
    }

    /// The unshifted landscape, `raw(0) == 0` and `raw >= 0` (up to the
    /// rounding of the Schwefel minimiser).
    fn raw(&self, z: &[f64]) -> f64 {
        let d = z.len();
        match self.kind {
            FunctionKind::Sphere => z.iter().map(|v| v * v).sum(),
            FunctionKind::Ellipsoid => z
                .iter()
                .enumerate()
                .map(|(i, v)| conditioning(i, d, 6.0) * v * v)
                .sum(),
            FunctionKind::Rastrigin => z
                .iter()
                .map(|v| 10.0 * (1.0 - (2.0 * PI * v).cos()) + v * v)
                .sum(),
            FunctionKind::Rosenbrock => {
                let c = (d as f64).sqrt() / 8.0;
                let c = c.max(1.0);
                let u: Vec<f64> = z.iter().map(|v| c * v + 1.0).collect();
                if d == 1 {
                    return (u[0] - 1.0).powi(2);
                }
                u.windows(2)
                    .map(|w| 100.0 * (w[0] * w[0] - w[1]).powi(2) + (w[0] - 1.0).powi(2))
                    .sum()
            }
            FunctionKind::AttractiveSector => z
                .iter()
                .zip(&self.x_opt)
                .map(|(v, o)| {
                    let s = if v * o > 0.0 { 100.0 } else { 1.0 };
                    (s * v).powi(2)
                })
                .sum(),
            FunctionKind::StepEllipsoid => z
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let q = if v.abs() > 0.5 {
                        v.round()
                    } else {
                        (10.0 * v).round() / 10.0
                    };
                    conditioning(i, d, 2.0) * q * q
                })
                .sum(),
            FunctionKind::Schaffers => {
                let s: Vec<f64> = if d == 1 {
                    vec![z[0].abs()]
                } else {
                    z.windows(2)
                        .map(|w| (w[0] * w[0] + w[1] * w[1]).sqrt())
                        .collect()
                };
                let m = s
                    .iter()
                    .map(|s| s.sqrt() + s.sqrt() * (50.0 * s.powf(0.2)).sin().powi(2))
                    .sum::<f64>()
                    / s.len() as f64;
                m * m
            }
            FunctionKind::GriewankRosenbrock => {
                let c = ((d as f64).sqrt() / 8.0).max(1.0);
                let u: Vec<f64> = z.iter().map(|v| c * v + 1.0).collect();
                let s: Vec<f64> = if d == 1 {
                    vec![(u[0] - 1.0).powi(2)]
                } else {
                    u.windows(2)
                        .map(|w| 100.0 * (w[0] * w[0] - w[1]).powi(2) + (w[0] - 1.0).powi(2))
                        .collect()
                };
                let k = s.len() as f64;
                10.0 / k * s.iter().map(|s| s / 4000.0 - s.cos()).sum::<f64>() + 10.0
            }
            FunctionKind::Schwefel => {
                let base = schwefel_term(SCHWEFEL_Y_STAR);
                z.iter()
                    .map(|v| {
                        let y = SCHWEFEL_Y_STAR + 100.0 * v;
                        let over = (y.abs() - 500.0).max(0.0);
                        (schwefel_term(y) - base) + over * over
                    })
                    .sum()
            }
            FunctionKind::KatsuuraLite => {
                let df = d as f64;
                let mut prod = 1.0;
                for (i, v) in z.iter().enumerate() {
                    let mut inner = 0.0;
                    for j in 1..=10 {
                        let p = 2f64.powi(j);
                        inner += (p * v - (p * v).round()).abs() / p;
                    }
                    prod *= (1.0 + (i + 1) as f64 * inner).powf(10.0 / df.powf(1.2));
                }
                10.0 / (df * df) * prod - 10.0 / (df * df)
            }
        }
    }
}
