use thiserror::Error;

/// Errors raised by grid construction, optimization and pricing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quantizer construction did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("degenerate objective: payoff vanishes on every quantization point")]
    DegenerateObjective,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("hessian is singular even after a Levenberg shift")]
    SingularHessian,

    #[error("model {0} has no exact terminal map; simulate paths instead")]
    NoTerminalMap(&'static str),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("cache file error: {0}")]
    Cache(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
