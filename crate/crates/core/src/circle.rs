//! Registration of periodic 1-D signals by circular shifts.
//!
//! Group elements are shifts `t ∈ [0, 1)` measured in periods; composition
//! is addition modulo one and `d(s, t)` is the arc distance
//! `min(|s − t| mod 1, 1 − |s − t| mod 1)`.

use crate::error::SolverFailure;
use crate::group::{GroupProblem, GroupSolver, GroupStep};
use crate::problem::InnerSolution;

#[derive(Debug, Clone, PartialEq)]
pub struct CircleShiftProblem {
    pub i0: Vec<f64>,
    pub i1: Vec<f64>,
}

/// `x mod 1` in `[0, 1)`.
pub fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(1.0);
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

/// Arc length from `x` to the nearest integer.
pub fn circle_abs(x: f64) -> f64 {
    let y = wrap(x);
    y.min(1.0 - y)
}

/// Periodic linear interpolation of `signal` at fractional index `x`.
pub fn sample_periodic(signal: &[f64], x: f64) -> f64 {
    let m = signal.len() as f64;
    let x = x.rem_euclid(m);
    let i = x.floor();
    let frac = x - i;
    let i = (i as usize) % signal.len();
    let j = (i + 1) % signal.len();
    signal[i] * (1.0 - frac) + signal[j] * frac
}

/// `I0` delayed by `t` periods: sample `k` of the result is `I0(k − tM)`.
pub fn shift_signal(signal: &[f64], t: f64) -> Vec<f64> {
    let m = signal.len() as f64;
    (0..signal.len())
        .map(|k| sample_periodic(signal, k as f64 - t * m))
        .collect()
}

impl CircleShiftProblem {
    pub fn new(i0: Vec<f64>, i1: Vec<f64>) -> Result<Self, String> {
        if i0.is_empty() || i0.len() != i1.len() {
            return Err(format!(
                "signals must be nonempty and of equal length (got {} and {})",
                i0.len(),
                i1.len()
            ));
        }
        if i0.iter().chain(&i1).any(|v| !v.is_finite()) {
            return Err("signals must be finite".to_string());
        }
        Ok(Self { i0, i1 })
    }

    pub fn len(&self) -> usize {
        self.i0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i0.is_empty()
    }

    /// Lipschitz constant of the fidelity in `t`: `M · max_k |I0[k+1] − I0[k]|`.
    pub fn lipschitz(&self) -> f64 {
        let m = self.i0.len();
        let max_jump = (0..m)
            .map(|k| (self.i0[(k + 1) % m] - self.i0[k]).abs())
            .fold(0.0, f64::max);
        m as f64 * max_jump
    }
}

impl GroupProblem for CircleShiftProblem {
    type Element = f64;

    fn identity(&self) -> f64 {
        0.0
    }

    fn compose(&self, g: &f64, h: &f64) -> f64 {
        wrap(g + h)
    }

    fn inverse(&self, g: &f64) -> f64 {
        wrap(-g)
    }

    fn distance(&self, g: &f64, h: &f64) -> f64 {
        circle_abs(g - h)
    }

    fn distance_to_identity(&self, g: &f64) -> f64 {
        circle_abs(*g)
    }

    /// Root-mean-square difference between the shifted `I0` and `I1`.
    fn fidelity(&self, t: &f64) -> f64 {
        let m = self.i0.len() as f64;
        let ss: f64 = self
            .i1
            .iter()
            .enumerate()
            .map(|(k, y)| {
                let d = sample_periodic(&self.i0, k as f64 - t * m) - y;
                d * d
            })
            .sum();
        (ss / m).sqrt()
    }

    fn name(&self) -> &str {
        "circle-shift"
    }
}

/// Coarse scan over equispaced shifts followed by golden-section refinement
/// around the best candidate.
#[derive(Debug, Clone, Copy)]
pub struct ScanGoldenSolver {
    pub candidates: usize,
    pub max_iter: usize,
}

impl Default for ScanGoldenSolver {
    fn default() -> Self {
        Self {
            candidates: 256,
            max_iter: 200,
        }
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimization of `f` on `[lo, hi]`; returns `(x, f(x), iterations)`.
pub fn golden_section<F: Fn(f64) -> f64>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
) -> (f64, f64, usize) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut it = 0;
    while hi - lo > tol && it < max_iter {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
        it += 1;
    }
    if f1 <= f2 {
        (x1, f1, it)
    } else {
        (x2, f2, it)
    }
}

impl GroupSolver<CircleShiftProblem> for ScanGoldenSolver {
    fn solve(
        &mut self,
        problem: &CircleShiftProblem,
        step: &GroupStep<'_, f64>,
    ) -> Result<InnerSolution<f64>, SolverFailure> {
        if self.candidates == 0 {
            return Err(SolverFailure::new("scan needs at least one candidate"));
        }
        let obj = |t: f64| step.objective(problem, &wrap(t));
        let h = 1.0 / self.candidates as f64;
        let mut best = (0.0, obj(0.0));
        for j in 1..self.candidates {
            let t = j as f64 * h;
            let v = obj(t);
            if v < best.1 {
                best = (t, v);
            }
        }
        let tol = step.tol.max(1e-14);
        let (t, v, it) = golden_section(obj, best.0 - h, best.0 + h, tol, self.max_iter);
        let t = if v <= best.1 { wrap(t) } else { best.0 };
        Ok(InnerSolution {
            increment: t,
            iterations: self.candidates + it,
            converged: true,
            residual: 2.0 * h * INV_PHI.powi(it as i32),
        })
    }
}
