//! Hierarchical (BV, L²) decomposition of images.
//!
//! An image `f` is split into layers `u_0, u_1, …` by solving one ROF
//! problem per scale on the previous residual with doubling weights. The
//! crate provides the discrete TV, an exact ROF solver with duality-gap
//! stopping, a certified estimator for the dual norm `‖·‖_*`, the
//! decomposition driver, and the energy-identity report.

pub mod decompose;
pub mod dual_norm;
pub mod grid;
pub mod io;
pub mod phantom;
pub mod rof;
pub mod tv;

pub use decompose::{
    energy_csv, energy_identity_report, tnv_decompose, EnergyRow, TnvDecomposition, TnvError,
    TnvProblem,
};
pub use dual_norm::{dual_norm_star, dual_norm_star_with, DualNormEstimate, DualNormOptions, WarmStart};
pub use grid::{GridError, ImageGrid};
pub use rof::{rof_solve, rof_solve_with, DualField, RofOptions, RofSolution};
pub use tv::{tv_full_norm, tv_seminorm, TvKind, TvRegularizer};
