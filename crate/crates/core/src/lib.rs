//! Hierarchical multiscale iteration for regularized inverse problems.
//!
//! Given data `N̂` and a forward map `N`, the iteration builds increments
//! `σ_0, σ_1, …` by solving one regularized problem per scale with weights
//! `λ_n` growing geometrically, and reports the partial sums
//! `σ̃_n = σ_0 + … + σ_n`. The tight variant penalizes `|σ̃_n|` with a
//! vanishing weight `a_n`; the group variant composes increments instead
//! of adding them.

pub mod circle;
pub mod driver;
pub mod error;
pub mod euclid;
pub mod group;
pub mod problem;
pub mod schedule;
pub mod trace;

pub use driver::{run_multiscale, single_step_regularized, RunOptions, SingleStep};
pub use error::{RunError, ScheduleError, SolverFailure, StepError};
pub use group::{
    group_distance_report, run_group_multiscale, BanachSolverAdapter, DistanceRow, GroupProblem,
    GroupSolver, GroupStep, GroupTrace, TranslationGroup,
};
pub use problem::{augmented_value, InnerSolution, InnerSolver, MultiscaleProblem, ScaleStep};
pub use schedule::{classify_schedule, ratio_table, RatioRow, ScaleSchedule, ScheduleRegime};
pub use trace::{fmt_f64, DecompositionTrace, ScaleReport, SummaryRow};

/// Builds the residual table of a trace from its stored values.
pub fn residual_summary<E>(trace: &DecompositionTrace<E>) -> Vec<SummaryRow> {
    trace.residual_summary()
}
