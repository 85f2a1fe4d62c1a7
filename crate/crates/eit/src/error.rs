use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EitError {
    #[error("invalid bounds [{a}, {b}]: need 0 < a <= b < inf")]
    Bounds { a: f64, b: f64 },
    #[error("cell {cell} has value {value}, outside [{a}, {b}]")]
    OutOfBounds { cell: usize, value: f64, a: f64, b: f64 },
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("mesh size must be positive")]
    EmptyMesh,
    #[error("boundary current has weighted mean {mean:e}, expected 0")]
    NonZeroMean { mean: f64 },
    #[error("stiffness matrix is singular or ill-conditioned (condition estimate {condition_estimate:e})")]
    IllConditioned { condition_estimate: f64 },
    #[error("linear solve residual {residual:e} exceeds {limit:e}")]
    Residual { residual: f64, limit: f64 },
    #[error("{k} current patterns requested but the {m}x{m} mesh supports at most {max}")]
    BasisSize { k: usize, m: usize, max: usize },
    #[error("NtD matrices differ in {what}: {left} vs {right}")]
    Mismatch {
        what: &'static str,
        left: String,
        right: String,
    },
    #[error("phantom: {0}")]
    Phantom(String),
    #[error("noise level must be finite and nonnegative, got {0}")]
    Noise(f64),
}
