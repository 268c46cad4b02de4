use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid sample space: {0}")]
    InvalidSpace(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("non-integrable function: non-finite value {value} at point {point}")]
    NonIntegrable { point: usize, value: f64 },

    #[error("cannot normalize null measure (entry {index})")]
    NullMeasure { index: usize },

    #[error("parameter out of domain: {0:?}")]
    OutOfDomain(Vec<f64>),

    #[error("total mass {mass} deviates from 1 by more than {tol:e}")]
    NotNormalized { mass: f64, tol: f64 },

    #[error("score undefined at point {point} along coordinate {coordinate}")]
    ScoreUndefined { point: usize, coordinate: usize },

    #[error("score not square-integrable at point {point}")]
    ScoreNotSquareIntegrable { point: usize },

    #[error("threshold too small: reduced metric condition number {condition:e}")]
    ThresholdTooSmall { condition: f64 },

    #[error("singular point: use cr_gap with reduced metric")]
    SingularPoint,

    #[error("model is not statistical")]
    NotStatistical,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("product space too large: {outcomes} outcomes (limit {limit})")]
    ProductTooLarge { outcomes: u128, limit: u128 },
}
