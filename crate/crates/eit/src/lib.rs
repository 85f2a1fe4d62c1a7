//! Multiscale reconstruction for the Calderón problem on the unit square.
//!
//! A scalar conductivity, constant on each cell of an `M × M` grid, is
//! probed with `K` trigonometric boundary currents. The forward model is a
//! bilinear finite-element Neumann solver; the data is the `K × K`
//! Neumann-to-Dirichlet matrix on the current basis. Reconstruction runs
//! the tight multiscale iteration with a total-variation regularizer.

pub mod basis;
pub mod error;
pub mod fem;
pub mod field;
pub mod inverse;
pub mod ntd;
pub mod phantom;
pub mod prox;
pub mod tv;

pub use basis::CurrentBasis;
pub use error::EitError;
pub use fem::{solve_neumann, FemMesh, NeumannFactor, NeumannSolution};
pub use field::{ConductivityField, TensorField};
pub use inverse::{
    eit_inner_solve, reconstruct_multiscale, ClassConfig, EitInnerSolver, EitProblem,
    EitReconstruction, FidelityEval, ReconstructError, SolverConfig,
};
pub use ntd::{ntd_distance, ntd_matrix, ntd_with_states, top_singular, Metric, NtdMatrix, NtdStates};
pub use phantom::{add_noise, make_phantom, Inclusion, PhantomSpec, Shape};
pub use tv::{tv_conductivity, tv_tensor, tv_tensor_field};
