use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("bisection failed: {0}")]
    Bisection(String),
    #[error("successive elimination stalled after {iterations} iterations (max rank {max_rank})")]
    SeaStalled {
        iterations: usize,
        max_rank: usize,
        gamma_trace: Vec<f64>,
    },
    #[error("solver did not converge: {0}")]
    Solver(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
