//! Error types shared by the multiscale drivers.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("schedule field `{field}` has invalid value {value}")]
    Invalid { field: &'static str, value: f64 },
    #[error("lambda_{n} = {value} is not a positive finite number")]
    LambdaOverflow { n: usize, value: f64 },
}

/// Failure reported by an inner solver.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message}")]
pub struct SolverFailure {
    pub message: String,
    /// Set when the failure is a loss of floating-point resolution rather
    /// than a breakdown of the algorithm.
    pub precision: bool,
}

impl SolverFailure {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            precision: false,
        }
    }

    pub fn precision(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            precision: true,
        }
    }
}

/// Reason a multiscale run stopped early.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("inner solver failed at scale {scale}: {source}")]
    Solver { scale: usize, source: SolverFailure },
    #[error("inner solver returned an inadmissible partial sum at scale {scale}")]
    Inadmissible { scale: usize },
    #[error("inner solver returned an increment with infinite regularizer at scale {scale}")]
    InfiniteRegularizer { scale: usize },
    #[error("non-finite objective at scale {scale}")]
    NonFinite { scale: usize },
}

impl StepError {
    /// Scale index at which the run stopped, if the failure happened inside the loop.
    pub fn scale(&self) -> Option<usize> {
        match self {
            StepError::Schedule(_) => None,
            StepError::Solver { scale, .. }
            | StepError::Inadmissible { scale }
            | StepError::InfiniteRegularizer { scale }
            | StepError::NonFinite { scale } => Some(*scale),
        }
    }

    pub fn is_precision(&self) -> bool {
        matches!(self, StepError::Solver { source, .. } if source.precision)
    }
}

/// A failed run together with every scale completed before the failure.
#[derive(Debug, Clone, Error)]
#[error("{error}")]
pub struct RunError<T> {
    pub error: StepError,
    pub partial: Box<T>,
}
