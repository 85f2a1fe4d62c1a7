use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CounterexampleError {
    #[error("invalid `{field}` = {value}: {reason}")]
    Config {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("radius {r} must be positive")]
    Radius { r: f64 },
    #[error("lambda values must be positive and increasing (got {0})")]
    Lambdas(String),
    #[error("{0}")]
    Solver(String),
}
