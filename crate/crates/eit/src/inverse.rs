//! Multiscale reconstruction of a scalar conductivity from NtD data.
//!
//! Elements are cell values of `σ` itself: `σ_0 ∈ E` and the later
//! increments `σ_n` are signed. The zero increment is not admissible at
//! scale 0, where the inner solver starts from the constant midpoint
//! `(a_ell + b_ell)/2`. Every field handed to the forward solver is
//! projected onto `[a_ell, b_ell]`.

use multiscale_core::{
    run_multiscale, DecompositionTrace, InnerSolution, InnerSolver, MultiscaleProblem, RunOptions,
    ScaleSchedule, ScaleStep, ScheduleRegime, SolverFailure, StepError,
};
use multiscale_tnv::TvKind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::CurrentBasis;
use crate::error::EitError;
use crate::fem::FemMesh;
use crate::field::{check_bounds, ConductivityField};
use crate::ntd::{ntd_with_states, top_singular, Metric, NtdMatrix};
use crate::prox::{tv_box_prox, ProxDual, TvTerm};
use crate::tv::{smoothed_tv_cells, tv_cells};

/// The admissible class `M_scal(a_ell, b_ell)` and the regularizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassConfig {
    pub a_ell: f64,
    pub b_ell: f64,
    pub kind: TvKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub metric: Metric,
    /// Projected-gradient iterations per scale.
    pub max_iter: usize,
    /// Stop when the relative objective decrease stays below this.
    pub tol: f64,
    /// TV smoothing relative to `b_ell − a_ell`.
    pub epsilon: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            metric: Metric::Spectral,
            max_iter: 2000,
            tol: 1e-8,
            epsilon: 1e-6,
        }
    }
}

/// The reconstruction problem on cell values of `σ`.
#[derive(Debug, Clone)]
pub struct EitProblem {
    pub nhat: NtdMatrix,
    pub basis: CurrentBasis,
    pub class: ClassConfig,
    pub metric: Metric,
}

/// Fidelity, its gradient with respect to the cell values, and the NtD matrix.
#[derive(Debug, Clone)]
pub struct FidelityEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub ntd: NtdMatrix,
}

impl EitProblem {
    pub fn new(nhat: NtdMatrix, basis: CurrentBasis, class: ClassConfig, metric: Metric) -> Result<Self, EitError> {
        check_bounds(class.a_ell, class.b_ell)?;
        if nhat.k != basis.k() || nhat.basis_id != basis.id {
            return Err(EitError::Mismatch {
                what: "basis",
                left: format!("{} (k = {})", nhat.basis_id, nhat.k),
                right: format!("{} (k = {})", basis.id, basis.k()),
            });
        }
        Ok(Self {
            nhat,
            basis,
            class,
            metric,
        })
    }

    pub fn m(&self) -> usize {
        self.basis.m
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.class.a_ell + self.class.b_ell)
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.class.a_ell, self.class.b_ell)
    }

    /// The conductivity with cell values projected onto `[a_ell, b_ell]`.
    pub fn field(&self, values: &[f64]) -> Result<ConductivityField, EitError> {
        ConductivityField::clamped(self.m(), values, self.class.a_ell, self.class.b_ell)
    }

    /// Fidelity value only.
    pub fn distance(&self, values: &[f64]) -> Result<f64, EitError> {
        Ok(self.evaluate(values, false)?.value)
    }

    /// Fidelity and, if requested, its gradient by the adjoint identity
    /// `∂N_ij/∂σ_c = −v_iᵀ K_c v_j` (the adjoint states coincide with the
    /// forward states because the discrete problem is self-adjoint).
    pub fn evaluate(&self, values: &[f64], with_gradient: bool) -> Result<FidelityEval, EitError> {
        let field = self.field(values)?;
        let states = ntd_with_states(&field, &self.basis)?;
        let k = self.basis.k();
        let r: Vec<f64> = self
            .nhat
            .data
            .iter()
            .zip(&states.matrix.data)
            .map(|(a, b)| a - b)
            .collect();
        let mesh: FemMesh = states.mesh;
        let cells = mesh.n_cells();
        let (value, gradient) = match self.metric {
            Metric::HilbertSchmidt => {
                let value = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                let mut gradient = vec![0.0; if with_gradient { cells } else { 0 }];
                if with_gradient && value > 0.0 {
                    let n = mesh.n_nodes();
                    let z: Vec<Vec<f64>> = (0..k)
                        .map(|i| {
                            let mut zi = vec![0.0; n];
                            for j in 0..k {
                                let c = r[i * k + j];
                                zi.iter_mut().zip(&states.states[j]).for_each(|(a, b)| *a += c * b);
                            }
                            zi
                        })
                        .collect();
                    for (c, gc) in gradient.iter_mut().enumerate() {
                        let s: f64 = (0..k).map(|i| mesh.cell_form(c, &states.states[i], &z[i])).sum();
                        *gc = s / value;
                    }
                }
                (value, gradient)
            }
            Metric::Spectral => {
                let top = top_singular(&r, k, 1e-12, 1_000_000);
                let mut gradient = vec![0.0; if with_gradient { cells } else { 0 }];
                if with_gradient && top.value > 0.0 {
                    let n = mesh.n_nodes();
                    let combine = |w: &[f64]| {
                        let mut out = vec![0.0; n];
                        for (i, wi) in w.iter().enumerate() {
                            out.iter_mut().zip(&states.states[i]).for_each(|(a, b)| *a += wi * b);
                        }
                        out
                    };
                    let u = combine(&top.left);
                    let v = combine(&top.right);
                    for (c, gc) in gradient.iter_mut().enumerate() {
                        *gc = mesh.cell_form(c, &u, &v);
                    }
                }
                (top.value, gradient)
            }
        };
        Ok(FidelityEval {
            value,
            gradient,
            ntd: states.matrix,
        })
    }
}

impl MultiscaleProblem for EitProblem {
    type Element = Vec<f64>;

    fn zero(&self) -> Vec<f64> {
        vec![0.0; self.m() * self.m()]
    }

    fn add(&self, x: &Vec<f64>, y: &Vec<f64>) -> Vec<f64> {
        x.iter().zip(y).map(|(a, b)| a + b).collect()
    }

    fn negate(&self, x: &Vec<f64>) -> Vec<f64> {
        x.iter().map(|a| -a).collect()
    }

    /// `L¹` norm.
    fn norm(&self, x: &Vec<f64>) -> f64 {
        let h2 = 1.0 / (self.m() * self.m()) as f64;
        h2 * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn regularizer(&self, x: &Vec<f64>) -> f64 {
        tv_cells(x, self.m(), self.class.kind)
    }

    /// Cell values within the box, up to rounding of `base + (x − base)`.
    fn is_admissible(&self, x: &Vec<f64>) -> bool {
        let (lo, hi) = self.bounds();
        let slack = 1e-12 * (hi - lo).max(1.0);
        x.len() == self.m() * self.m() && x.iter().all(|v| *v >= lo - slack && *v <= hi + slack)
    }

    fn fidelity(&self, x: &Vec<f64>) -> f64 {
        self.distance(x).unwrap_or(f64::INFINITY)
    }
}

/// Proximal gradient on the scale objective, with the TV and box terms
/// handled exactly by [`tv_box_prox`]. Exponents outside the prox-friendly
/// case fall back to projected gradient on an `ε`-smoothed objective.
#[derive(Debug, Clone)]
pub struct EitInnerSolver {
    pub config: SolverConfig,
}

/// Smoothed objective with gradient, in the variable `x = base + δ`.
struct Smoothed<'a> {
    problem: &'a EitProblem,
    base: &'a [f64],
    lambda: f64,
    a: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    eps: f64,
}

/// The previous partial sum, or the constant midpoint when it is not admissible.
fn start_point(problem: &EitProblem, base: &[f64]) -> Vec<f64> {
    if problem.is_admissible(&base.to_vec()) {
        let (lo, hi) = problem.bounds();
        base.iter().map(|v| v.clamp(lo, hi)).collect()
    } else {
        vec![problem.midpoint(); base.len()]
    }
}

fn difference(x: &[f64], base: &[f64]) -> Vec<f64> {
    x.iter().zip(base).map(|(p, q)| p - q).collect()
}

fn pow_grad(r: f64, p: f64) -> f64 {
    if r > 0.0 {
        p * r.powf(p - 1.0)
    } else if p <= 1.0 {
        1.0
    } else {
        0.0
    }
}

impl Smoothed<'_> {
    fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>), EitError> {
        let m = self.problem.m();
        let kind = self.problem.class.kind;
        let fid = self.problem.evaluate(x, true)?;
        let mut grad: Vec<f64> = fid.gradient.iter().map(|g| self.lambda * pow_grad(fid.value, self.alpha) * g).collect();
        let mut value = self.lambda * fid.value.powf(self.alpha);
        let mut g_tv = vec![0.0; x.len()];
        if self.a != 0.0 {
            let r = smoothed_tv_cells(x, m, kind, self.eps, &mut g_tv);
            value += self.lambda * self.a * r.powf(self.gamma);
            let c = self.lambda * self.a * pow_grad(r, self.gamma);
            grad.iter_mut().zip(&g_tv).for_each(|(g, t)| *g += c * t);
        }
        let delta: Vec<f64> = x.iter().zip(self.base).map(|(p, q)| p - q).collect();
        let r = smoothed_tv_cells(&delta, m, kind, self.eps, &mut g_tv);
        value += r.powf(self.beta);
        let c = pow_grad(r, self.beta);
        grad.iter_mut().zip(&g_tv).for_each(|(g, t)| *g += c * t);
        Ok((value, grad))
    }
}

impl EitInnerSolver {
    /// Projected gradient on the smoothed objective; used when an exponent
    /// on a TV term differs from 1.
    fn smoothed_gradient(
        &self,
        problem: &EitProblem,
        step: &ScaleStep<'_, Vec<f64>>,
    ) -> Result<InnerSolution<Vec<f64>>, SolverFailure> {
        let cfg = self.config;
        let (lo, hi) = problem.bounds();
        let range = hi - lo;
        let obj = Smoothed {
            problem,
            base: step.base,
            lambda: step.lambda,
            a: step.a,
            alpha: step.alpha,
            beta: step.beta,
            gamma: step.gamma,
            eps: cfg.epsilon * range,
        };
        let tol = step.tol;
        let fail = |e: EitError| SolverFailure::new(format!("forward solve failed: {e}"));
        let project = |v: f64| v.clamp(lo, hi);

        let mut x = start_point(problem, step.base);
        let (mut f, mut g) = obj.eval(&x).map_err(fail)?;
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax == 0.0 {
            return Ok(InnerSolution::exact(difference(&x, step.base)));
        }
        let mut t = 0.1 * range / gmax;
        let mut quiet = 0;
        let mut last_rel = f64::INFINITY;
        let mut moved = false;
        let mut it = 0;
        let mut converged = false;
        while it < cfg.max_iter {
            it += 1;
            let mut accepted = None;
            for _ in 0..60 {
                let xn: Vec<f64> = x.iter().zip(&g).map(|(p, q)| project(p - t * q)).collect();
                let s2: f64 = xn.iter().zip(&x).map(|(p, q)| (p - q) * (p - q)).sum();
                if s2 == 0.0 {
                    break;
                }
                let (fnew, gnew) = obj.eval(&xn).map_err(fail)?;
                if fnew <= f - 1e-4 * s2 / t {
                    accepted = Some((xn, fnew, gnew));
                    break;
                }
                t *= 0.5;
            }
            let Some((xn, fnew, gnew)) = accepted else {
                converged = moved;
                break;
            };
            moved = true;
            let mut ss = 0.0;
            let mut sy = 0.0;
            for i in 0..x.len() {
                let s = xn[i] - x[i];
                let y = gnew[i] - g[i];
                ss += s * s;
                sy += s * y;
            }
            t = if sy > 0.0 { (ss / sy).clamp(1e-30, 1e30) } else { (2.0 * t).min(1e30) };
            last_rel = (f - fnew) / fnew.abs().max(f64::MIN_POSITIVE);
            x = xn;
            f = fnew;
            g = gnew;
            if last_rel <= tol {
                quiet += 1;
                if quiet >= 5 {
                    converged = true;
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        if !moved {
            return Ok(InnerSolution {
                increment: difference(&x, step.base),
                iterations: it,
                converged: false,
                residual: f64::INFINITY,
            });
        }
        Ok(InnerSolution {
            increment: difference(&x, step.base),
            iterations: it,
            converged,
            residual: last_rel,
        })
    }

    /// Proximal gradient: explicit steps on `λ d^α`, exact proximal steps on
    /// `λ a |x| + |x − base|` restricted to the box.
    fn proximal(
        &self,
        problem: &EitProblem,
        step: &ScaleStep<'_, Vec<f64>>,
    ) -> Result<InnerSolution<Vec<f64>>, SolverFailure> {
        let cfg = self.config;
        let m = problem.m();
        let (lo, hi) = problem.bounds();
        let range = hi - lo;
        let h = 1.0 / m as f64;
        let full = problem.class.kind == TvKind::FullNorm;
        let fail = |e: EitError| SolverFailure::new(format!("forward solve failed: {e}"));
        let base: &[f64] = step.base;
        let smooth = |x: &[f64]| -> Result<(f64, Vec<f64>), SolverFailure> {
            let fid = problem.evaluate(x, true).map_err(fail)?;
            let c = step.lambda * pow_grad(fid.value, step.alpha);
            Ok((
                step.lambda * fid.value.powf(step.alpha),
                fid.gradient.iter().map(|g| c * g).collect(),
            ))
        };
        let kind = problem.class.kind;
        let nonsmooth = |x: &[f64]| -> f64 {
            let delta: Vec<f64> = x.iter().zip(base).map(|(p, q)| p - q).collect();
            let mut v = tv_cells(&delta, m, kind);
            if step.a != 0.0 {
                v += step.lambda * step.a * tv_cells(x, m, kind);
            }
            v
        };
        let n = base.len();
        let n_terms = if step.a != 0.0 { 2 } else { 1 };
        let mut dual = ProxDual::zeros(n_terms, n);
        let prox = |z: &[f64], t: f64, phi: f64, dual: &mut ProxDual| {
            // The prox gap is measured in units of `t · Φ`.
            let prox_tol = (1e-3 * step.tol * t * phi.abs()).max(1e-15 * n as f64 * range * range);
            let mut terms = vec![TvTerm {
                center: Some(base),
                tv_weight: t * h,
                l1_weight: if full { t * h * h } else { 0.0 },
            }];
            if step.a != 0.0 {
                let w = t * step.lambda * step.a;
                terms.push(TvTerm {
                    center: None,
                    tv_weight: w * h,
                    l1_weight: if full { w * h * h } else { 0.0 },
                });
            }
            tv_box_prox(z, &terms, m, lo, hi, prox_tol, 20_000, dual).x
        };

        let mut x = start_point(problem, base);
        let (mut s, mut g) = smooth(&x)?;
        let mut phi = s + nonsmooth(&x);
        let gmax = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if gmax == 0.0 {
            return Ok(InnerSolution::exact(difference(&x, step.base)));
        }
        let mut t = 0.1 * range / gmax;
        let mut it = 0;
        let mut quiet = 0;
        let mut last_rel = f64::INFINITY;
        let mut converged = false;
        let mut best = (phi, x.clone());
        while it < cfg.max_iter {
            it += 1;
            let mut accepted = None;
            for _ in 0..60 {
                let z: Vec<f64> = x.iter().zip(&g).map(|(p, q)| p - t * q).collect();
                let xn = prox(&z, t, phi, &mut dual);
                let mut lin = 0.0;
                let mut d2 = 0.0;
                for i in 0..n {
                    let d = xn[i] - x[i];
                    lin += g[i] * d;
                    d2 += d * d;
                }
                if d2 == 0.0 {
                    break;
                }
                let (sn, gn) = smooth(&xn)?;
                if sn <= s + lin + d2 / (2.0 * t) {
                    accepted = Some((xn, sn, gn, d2));
                    break;
                }
                t *= 0.5;
                dual = ProxDual::zeros(n_terms, n);
            }
            let Some((xn, sn, gn, d2)) = accepted else {
                converged = true;
                break;
            };
            let phin = sn + nonsmooth(&xn);
            last_rel = (phi - phin) / phin.abs().max(f64::MIN_POSITIVE);
            let small_step = d2.sqrt() <= 1e-12 * range * (n as f64).sqrt();
            x = xn;
            s = sn;
            g = gn;
            phi = phin;
            if phi < best.0 {
                best = (phi, x.clone());
            }
            if small_step {
                converged = true;
                break;
            }
            if last_rel.abs() <= step.tol {
                quiet += 1;
                if quiet >= 3 {
                    converged = true;
                    break;
                }
            } else {
                quiet = 0;
            }
            t *= 1.5;
        }
        Ok(InnerSolution {
            increment: difference(&best.1, base),
            iterations: it,
            converged,
            residual: last_rel,
        })
    }
}

impl InnerSolver<EitProblem> for EitInnerSolver {
    fn solve(
        &mut self,
        problem: &EitProblem,
        step: &ScaleStep<'_, Vec<f64>>,
    ) -> Result<InnerSolution<Vec<f64>>, SolverFailure> {
        if step.beta == 1.0 && (step.a == 0.0 || step.gamma == 1.0) {
            self.proximal(problem, step)
        } else {
            self.smoothed_gradient(problem, step)
        }
    }
}

/// One inner solve from partial sum `base` with exponents `(α, β, γ)`.
#[allow(clippy::too_many_arguments)]
pub fn eit_inner_solve(
    problem: &EitProblem,
    base: &Vec<f64>,
    lambda: f64,
    a: f64,
    exponents: (f64, f64, f64),
    config: SolverConfig,
) -> Result<InnerSolution<Vec<f64>>, SolverFailure> {
    let step = ScaleStep {
        index: 0,
        base,
        lambda,
        a,
        alpha: exponents.0,
        beta: exponents.1,
        gamma: exponents.2,
        tol: config.tol,
    };
    EitInnerSolver { config }.solve(problem, &step)
}

#[derive(Debug, Error)]
pub enum ReconstructError {
    #[error(transparent)]
    Input(#[from] EitError),
    #[error(transparent)]
    Step(#[from] StepError),
}

/// A multiscale reconstruction: the trace and the fields `σ̃_n`.
#[derive(Debug, Clone)]
pub struct EitReconstruction {
    pub trace: DecompositionTrace<Vec<f64>>,
    pub midpoint: f64,
    /// `σ̃_n` projected onto the box, for every completed scale.
    pub fields: Vec<ConductivityField>,
    pub warnings: Vec<String>,
}

impl EitReconstruction {
    fn from_trace(problem: &EitProblem, trace: DecompositionTrace<Vec<f64>>, warnings: Vec<String>) -> Result<Self, EitError> {
        let fields = trace
            .partial_sums
            .iter()
            .map(|sum| problem.field(sum))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            trace,
            midpoint: problem.midpoint(),
            fields,
            warnings,
        })
    }
}

/// Runs the multiscale iteration on measured data `nhat`.
pub fn reconstruct_multiscale(
    nhat: &NtdMatrix,
    basis: &CurrentBasis,
    schedule: &ScaleSchedule,
    class: ClassConfig,
    solver: SolverConfig,
) -> Result<EitReconstruction, (ReconstructError, Option<EitReconstruction>)> {
    let problem = EitProblem::new(nhat.clone(), basis.clone(), class, solver.metric).map_err(|e| (e.into(), None))?;
    let mut warnings = Vec::new();
    let regime = schedule.regime();
    if regime != ScheduleRegime::TightConvergent {
        warnings.push(format!("schedule regime is {regime}; convergence is only guaranteed for tight-convergent schedules"));
    }
    let mut inner = EitInnerSolver { config: solver };
    match run_multiscale(&problem, schedule, &mut inner, RunOptions::new(solver.tol)) {
        Ok(trace) => EitReconstruction::from_trace(&problem, trace, warnings).map_err(|e| (e.into(), None)),
        Err(run) => {
            let partial = EitReconstruction::from_trace(&problem, *run.partial, warnings).ok();
            Err((run.error.into(), partial))
        }
    }
}
