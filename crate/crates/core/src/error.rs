use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("scan cap too small: maximizer reached n_cap = {n_cap}")]
    CapTooSmall { n_cap: u32 },

    #[error("problem too large: {work} units of work exceeds budget {budget}")]
    TooLarge { work: u128, budget: u128 },

    #[error("height truncation did not converge up to h_max = {h_max}")]
    TruncationFailure { h_max: u32 },

    #[error("region is not simply connected")]
    UnsupportedRegion,

    #[error("invalid cylinder collection: {0}")]
    InvalidCollection(String),

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },
}
