use multiscale_core::StepError;
use thiserror::Error;

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure{}: {message}", at(*.scale))]
    Solver { scale: Option<usize>, message: String },
    #[error("precision budget exhausted{}: {message}", at(*.scale))]
    Precision { scale: Option<usize>, message: String },
}

fn at(scale: Option<usize>) -> String {
    scale.map(|s| format!(" at scale {s}")).unwrap_or_default()
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver { .. } => 3,
            CliError::Precision { .. } => 4,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config_error",
            CliError::Solver { .. } => "solver_failure",
            CliError::Precision { .. } => "precision_abort",
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl From<StepError> for CliError {
    fn from(e: StepError) -> Self {
        let scale = e.scale();
        if e.is_precision() {
            return CliError::Precision {
                scale,
                message: e.to_string(),
            };
        }
        match e {
            StepError::Schedule(s) => CliError::Config(s.to_string()),
            other => CliError::Solver {
                scale,
                message: other.to_string(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use multiscale_core::{ScheduleError, SolverFailure};

    #[test]
    fn step_errors_map_to_exit_codes() {
        let solver: CliError = StepError::Solver { scale: 3, source: SolverFailure::new("stalled") }.into();
        assert_eq!(solver.exit_code(), 3);
        assert!(solver.to_string().contains("at scale 3"));
        let precision: CliError = StepError::Solver { scale: 9, source: SolverFailure::precision("floor") }.into();
        assert_eq!((precision.exit_code(), precision.status()), (4, "precision_abort"));
        let schedule: CliError = StepError::Schedule(ScheduleError::Invalid { field: "alpha", value: 0.5 }).into();
        assert_eq!((schedule.exit_code(), schedule.status()), (2, "config_error"));
        let nonfinite: CliError = StepError::NonFinite { scale: 0 }.into();
        assert_eq!(nonfinite.status(), "solver_failure");
    }
}
