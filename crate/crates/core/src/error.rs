use thiserror::Error;

/// Errors produced by the solvers and the configuration layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("integration failed at t = {time}: {reason}")]
    Integration { time: f64, reason: String },

    #[error("orbit did not settle within {periods} periods (last residual {residual:e})")]
    Settle { periods: usize, residual: f64 },

    #[error("trajectory spans {span} but one period is {period}")]
    PeriodMismatch { span: f64, period: f64 },

    #[error("degenerate point: {0}")]
    Degenerate(String),

    #[error("singular recurrence coefficient at n = {n}")]
    SingularCoefficient { n: i64 },

    #[error("singular continued fraction at level n = {n}")]
    SingularFraction { n: i64 },

    #[error("singular triplet solution: {0}")]
    SingularSolution(String),

    #[error("sweep quality: {singular} of {total} grid points are singular")]
    SweepQuality { singular: usize, total: usize },

    #[error("{0}")]
    Regime(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for configuration or parameter validation failures, false for
    /// failures raised while solving.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidParam { .. } | Error::Config { .. })
    }
}
