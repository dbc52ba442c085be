//! Behaviour-space analysis of iterative optimisation algorithms.
//!
//! The crate reads and writes evaluation traces and lineage logs, computes
//! per-trace behaviour metrics and anytime performance (AOCC), builds search
//! trajectory networks over behaviour space and code evolution graphs over
//! algorithm lineages, and ships a small deterministic algorithm-evolution
//! harness that produces all of the above without a language model.

pub mod benchmarks;
pub mod ceg;
pub mod graph;
pub mod harness;
pub mod metrics;
pub mod par;
pub mod performance;
pub mod pipeline;
pub mod report;
pub mod seed;
pub mod stn;
pub mod trace;
