//! Executable counterexamples for the multiscale iteration.
//!
//! [`planar`] follows a trajectory in `ℝ²` whose iterates keep a fixed radius
//! pattern while their angle turns by quarter turns, so the partial sums do
//! not converge although every step is a global minimizer. [`l2`] exhibits
//! single-step minimizers in `ℓ₂` that either escape to infinity or drift to
//! ever higher coordinates as `λ` grows.

pub mod error;
pub mod l2;
pub mod planar;

pub use error::CounterexampleError;
pub use l2::{l2ex_f, log_ladder, run_l2_example, Branch, L2Config, L2Example, L2Report, L2Row, L2Version};
pub use planar::{
    planar_argmin, planar_sequences, run_planar_counterexample, ArgminOptions, ArgminResult, PlanarConfig,
    PlanarField, PlanarRow, PlanarTrajectory, PolarRegion,
};
