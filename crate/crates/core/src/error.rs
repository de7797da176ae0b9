use thiserror::Error;

/// Errors produced by the detection library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid network model: {0}")]
    InvalidModel(String),

    #[error("unsupported model kind: {0}")]
    UnsupportedKind(&'static str),

    #[error("invalid batch: {0}")]
    InvalidBatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("both exponents are infeasible for the given type")]
    BothInfeasible,

    #[error("exponent solver did not converge after {iterations} iterations (best residual {best_residual:e})")]
    NoConvergence { iterations: usize, best_residual: f64 },

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("threshold calibration failed: {0}")]
    Calibration(String),

    #[error("type space too large: {required} types exceeds limit {limit}")]
    Capacity { required: u128, limit: u128 },

    #[error("detector already stopped at time {0}")]
    AlreadyStopped(u64),

    #[error("at time {time}: {source}")]
    AtTime {
        time: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("horizon too small: {censored} of {reps} runs censored")]
    HorizonTooSmall { censored: usize, reps: usize },

    #[error("no completed runs")]
    NoRuns,
}

pub type Result<T> = std::result::Result<T, Error>;
