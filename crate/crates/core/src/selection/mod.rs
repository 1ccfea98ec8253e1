//! Representative subset selection over the base set: similarity graph,
//! diffusion-based representativeness and greedy maximization.

mod diffusion;
mod greedy;
mod matrix;
pub mod oracle;

use thiserror::Error;

pub use diffusion::{diffuse_once, estimate_spread, SpreadEstimate};
pub use greedy::{greedy_select, SelectionResult};
pub use matrix::{build_matrices, NormalizedSimilarityMatrix, SimilarityMatrix};
pub use oracle::{
    bound_check, brute_force_optimum, exact_expected_spread, greedy_bound_factor, greedy_exact, random_enumerable,
    BoundCheckSummary, ExactSpread,
};

use crate::error::MetricsError;

#[derive(Debug, Error, PartialEq)]
pub enum SelectionError {
    #[error("need at least 2 base samples, got {0}")]
    TooFewSamples(usize),
    #[error("all base samples are duplicates of one another")]
    AllDuplicates,
    #[error("subset is empty")]
    EmptySubset,
    #[error("unknown sample id {0:?}")]
    UnknownId(String),
    #[error("run count must be at least 1")]
    ZeroRuns,
    #[error("subset size {p} out of range 1..={available}")]
    BadSubsetSize { p: usize, available: usize },
    #[error("instance too large for exact enumeration: {0}")]
    TooLarge(String),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}
