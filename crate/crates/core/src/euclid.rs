//! Distance-to-target problems on `R^D` with a closed-form scale solver.

use crate::error::SolverFailure;
use crate::problem::{InnerSolution, InnerSolver, MultiscaleProblem, ScaleStep};

/// `N = identity` on `R^D` with data `x̂`: fidelity `‖x − x̂‖`, regularizer `‖x‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanProblem {
    pub target: Vec<f64>,
}

impl EuclideanProblem {
    pub fn new(target: Vec<f64>) -> Self {
        Self { target }
    }

    pub fn dim(&self) -> usize {
        self.target.len()
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl MultiscaleProblem for EuclideanProblem {
    type Element = Vec<f64>;

    fn zero(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    fn add(&self, x: &Vec<f64>, y: &Vec<f64>) -> Vec<f64> {
        x.iter().zip(y).map(|(a, b)| a + b).collect()
    }

    fn negate(&self, x: &Vec<f64>) -> Vec<f64> {
        x.iter().map(|v| -v).collect()
    }

    fn norm(&self, x: &Vec<f64>) -> f64 {
        norm2(x)
    }

    fn regularizer(&self, x: &Vec<f64>) -> f64 {
        norm2(x)
    }

    fn is_admissible(&self, x: &Vec<f64>) -> bool {
        x.iter().all(|v| v.is_finite())
    }

    fn fidelity(&self, x: &Vec<f64>) -> f64 {
        let d: Vec<f64> = x.iter().zip(&self.target).map(|(a, b)| a - b).collect();
        norm2(&d)
    }
}

/// Exact minimizer for `α = 2`, `β = 1` and either `a = 0` or `γ = 2`.
///
/// With `x = base + σ` the scale objective is, up to a constant,
/// `λ(1 + a)‖x − c‖² + ‖x − base‖` with `c = x̂ / (1 + a)`, so
/// `σ = shrink(c − base, 1 / (2λ(1 + a)))`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ShrinkageSolver;

/// Block soft-thresholding: `v · max(0, 1 − t/‖v‖)`.
pub fn shrink(v: &[f64], t: f64) -> Vec<f64> {
    let n = norm2(v);
    if n <= t {
        vec![0.0; v.len()]
    } else {
        let s = 1.0 - t / n;
        v.iter().map(|x| x * s).collect()
    }
}

impl InnerSolver<EuclideanProblem> for ShrinkageSolver {
    fn solve(
        &mut self,
        problem: &EuclideanProblem,
        step: &ScaleStep<'_, Vec<f64>>,
    ) -> Result<InnerSolution<Vec<f64>>, SolverFailure> {
        if step.alpha != 2.0 || step.beta != 1.0 || (step.a != 0.0 && step.gamma != 2.0) {
            return Err(SolverFailure::new(
                "shrinkage solver needs alpha = 2, beta = 1 and gamma = 2 or a = 0",
            ));
        }
        let w = 1.0 + step.a;
        let v: Vec<f64> = problem
            .target
            .iter()
            .zip(step.base.iter())
            .map(|(t, b)| t / w - b)
            .collect();
        Ok(InnerSolution::exact(shrink(&v, 1.0 / (2.0 * step.lambda * w))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shrink_kills_short_vectors() {
        assert_eq!(shrink(&[0.3, 0.4], 0.5), vec![0.0, 0.0]);
        let s = shrink(&[3.0, 4.0], 1.0);
        assert!((s[0] - 2.4).abs() < 1e-15 && (s[1] - 3.2).abs() < 1e-15);
    }
}
