//! Shifted test functions on `[-5, 5]^d` and baseline optimizers that
//! produce reference traces.

mod baselines;
mod functions;

pub use baselines::{baseline_de, baseline_one_plus_one_es, baseline_random_search, Recorder};
pub use functions::{make_function, BenchmarkFunction, FunctionKind, FUNCTION_IDS};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BenchError {
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("instance ids start at 1")]
    ZeroInstance,
    #[error("budget must be at least {0}")]
    BudgetTooSmall(usize),
    #[error("population size must be at least 4, got {0}")]
    PopulationTooSmall(usize),
}
