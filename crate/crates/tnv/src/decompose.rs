//! The hierarchical (BV, L²) decomposition `f = u_0 + u_1 + … + u_n + v_n`.
//!
//! Scale `j` solves `min_u λ_j ‖v_{j−1} − u‖² + J(u)` with `v_{−1} = f`,
//! which is the multiscale iteration with identity forward map, fidelity
//! `‖f − σ̃‖_{L²}`, `α = 2`, `β = 1` and no partial-sum penalty.

use multiscale_core::{
    run_multiscale, DecompositionTrace, InnerSolution, InnerSolver, MultiscaleProblem,
    RunOptions, ScaleSchedule, ScaleStep, SolverFailure, StepError,
};
use serde::Serialize;
use thiserror::Error;

use crate::grid::ImageGrid;
use crate::rof::{rof_solve_with, DualField, RofOptions};
use crate::tv::TvRegularizer;

/// Identity forward map on images with a TV regularizer.
#[derive(Debug, Clone)]
pub struct TnvProblem {
    pub f: ImageGrid,
    pub reg: TvRegularizer,
}

impl MultiscaleProblem for TnvProblem {
    type Element = ImageGrid;

    fn zero(&self) -> ImageGrid {
        self.f.zeros_like()
    }

    fn add(&self, x: &ImageGrid, y: &ImageGrid) -> ImageGrid {
        x.add(y)
    }

    fn negate(&self, x: &ImageGrid) -> ImageGrid {
        x.scale(-1.0)
    }

    fn norm(&self, x: &ImageGrid) -> f64 {
        x.l2_norm()
    }

    fn regularizer(&self, x: &ImageGrid) -> f64 {
        self.reg.value(x)
    }

    fn is_admissible(&self, x: &ImageGrid) -> bool {
        x.same_shape(&self.f) && x.data.iter().all(|v| v.is_finite())
    }

    fn fidelity(&self, x: &ImageGrid) -> f64 {
        self.f.sub(x).l2_norm()
    }
}

/// ROF inner solver; remembers the dual field of every scale it solved.
#[derive(Debug, Clone)]
pub struct RofInnerSolver {
    pub max_iter: usize,
    pub duals: Vec<DualField>,
    pub gaps: Vec<f64>,
}

impl RofInnerSolver {
    pub fn new(max_iter: usize) -> Self {
        Self {
            max_iter,
            duals: Vec::new(),
            gaps: Vec::new(),
        }
    }
}

impl InnerSolver<TnvProblem> for RofInnerSolver {
    fn solve(
        &mut self,
        problem: &TnvProblem,
        step: &ScaleStep<'_, ImageGrid>,
    ) -> Result<InnerSolution<ImageGrid>, SolverFailure> {
        let fj = problem.f.sub(step.base);
        let sol = rof_solve_with(
            &fj,
            step.lambda,
            problem.reg,
            RofOptions::new(step.tol, self.max_iter),
            None,
        );
        self.duals.push(sol.dual);
        self.gaps.push(sol.primal_dual_gap);
        Ok(InnerSolution {
            increment: sol.u,
            iterations: sol.iterations,
            converged: sol.converged,
            residual: sol.primal_dual_gap,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TnvError {
    #[error("image decomposition needs a0 = 0, alpha = 2 and beta = 1 (got a0 = {a0}, alpha = {alpha}, beta = {beta})")]
    Regime { a0: f64, alpha: f64, beta: f64 },
    #[error(transparent)]
    Step(#[from] StepError),
}

impl TnvError {
    pub fn scale(&self) -> Option<usize> {
        match self {
            TnvError::Regime { .. } => None,
            TnvError::Step(e) => e.scale(),
        }
    }
}

/// Layers, residuals and per-scale dual fields of a decomposition.
#[derive(Debug, Clone)]
pub struct TnvDecomposition {
    pub f: ImageGrid,
    pub reg: TvRegularizer,
    pub trace: DecompositionTrace<ImageGrid>,
    /// `v_n = f − (u_0 + … + u_n)`
    pub residuals: Vec<ImageGrid>,
    /// ROF dual field at each scale; `None` when the zero layer was kept.
    pub duals: Vec<Option<DualField>>,
}

impl TnvDecomposition {
    pub fn layers(&self) -> &[ImageGrid] {
        &self.trace.increments
    }

    pub fn residual_norms(&self) -> Vec<f64> {
        self.residuals.iter().map(|v| v.l2_norm()).collect()
    }
}

pub fn check_tnv_schedule(s: &ScaleSchedule) -> Result<(), TnvError> {
    if s.a0 != 0.0 || s.alpha != 2.0 || s.beta != 1.0 {
        return Err(TnvError::Regime {
            a0: s.a0,
            alpha: s.alpha,
            beta: s.beta,
        });
    }
    s.validate().map_err(|e| TnvError::Step(e.into()))
}

/// Runs the decomposition for scales `0..=s.n_max`.
pub fn tnv_decompose(
    f: &ImageGrid,
    s: &ScaleSchedule,
    reg: TvRegularizer,
    tol: f64,
    max_iter: usize,
) -> Result<TnvDecomposition, (TnvError, Option<TnvDecomposition>)> {
    check_tnv_schedule(s).map_err(|e| (e, None))?;
    let problem = TnvProblem { f: f.clone(), reg };
    let mut solver = RofInnerSolver::new(max_iter);
    let assemble = |trace: DecompositionTrace<ImageGrid>, solver: &RofInnerSolver| {
        let residuals = trace.partial_sums.iter().map(|s| f.sub(s)).collect();
        let duals = trace
            .reports
            .iter()
            .zip(&solver.duals)
            .map(|(r, d)| (!r.safeguard_used).then(|| d.clone()))
            .collect();
        TnvDecomposition {
            f: f.clone(),
            reg,
            trace,
            residuals,
            duals,
        }
    };
    match run_multiscale(&problem, s, &mut solver, RunOptions::new(tol)) {
        Ok(trace) => Ok(assemble(trace, &solver)),
        Err(e) => {
            let partial = assemble(*e.partial, &solver);
            Err((TnvError::Step(e.error), Some(partial)))
        }
    }
}

/// One row of the energy-identity report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyRow {
    pub n: usize,
    pub lambda: f64,
    /// `‖f_n‖²`, the input of scale `n`.
    pub input_sq: f64,
    pub layer_sq: f64,
    /// `J(u_n) / λ_n`
    pub reg_over_lambda: f64,
    pub residual_sq: f64,
    /// `|‖f_n‖² − (‖u_n‖² + J(u_n)/λ_n + ‖v_n‖²)|`
    pub step_gap: f64,
    /// `|‖f‖² − Σ_{j≤n} (‖u_j‖² + J(u_j)/λ_j) − ‖v_n‖²|`
    pub cumulative_gap: f64,
}

pub fn energy_identity_report(d: &TnvDecomposition) -> Vec<EnergyRow> {
    let f_sq = d.f.l2_norm_sq();
    let mut sum = 0.0;
    let mut rows = Vec::with_capacity(d.residuals.len());
    for (n, u) in d.trace.increments.iter().enumerate() {
        let lambda = d.trace.schedule.lambda(n);
        let input_sq = if n == 0 {
            f_sq
        } else {
            d.residuals[n - 1].l2_norm_sq()
        };
        let layer_sq = u.l2_norm_sq();
        let reg_over_lambda = d.reg.value(u) / lambda;
        let residual_sq = d.residuals[n].l2_norm_sq();
        sum += layer_sq + reg_over_lambda;
        rows.push(EnergyRow {
            n,
            lambda,
            input_sq,
            layer_sq,
            reg_over_lambda,
            residual_sq,
            step_gap: (input_sq - (layer_sq + reg_over_lambda + residual_sq)).abs(),
            cumulative_gap: (f_sq - sum - residual_sq).abs(),
        });
    }
    rows
}

pub const ENERGY_HEADER: &str =
    "n,lambda,input_sq,layer_sq,reg_over_lambda,residual_sq,step_gap,cumulative_gap";

pub fn energy_csv(rows: &[EnergyRow]) -> String {
    use multiscale_core::fmt_f64 as g;
    let mut out = String::from(ENERGY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.n,
            g(r.lambda),
            g(r.input_sq),
            g(r.layer_sq),
            g(r.reg_over_lambda),
            g(r.residual_sq),
            g(r.step_gap),
            g(r.cumulative_gap)
        ));
    }
    out
}
