//! The abstract problem and inner-solver contracts.

use std::fmt::Debug;

use crate::error::SolverFailure;

/// A regularized inverse problem `N(σ) ≈ N̂` on a vector space `X`.
///
/// Implementations must be free of shared mutable state so that evaluators
/// can be called from several threads.
pub trait MultiscaleProblem {
    type Element: Clone + PartialEq + Debug;

    fn zero(&self) -> Self::Element;
    fn add(&self, x: &Self::Element, y: &Self::Element) -> Self::Element;
    fn negate(&self, x: &Self::Element) -> Self::Element;
    /// Norm of `x` in the ambient space `X`.
    fn norm(&self, x: &Self::Element) -> f64;
    /// Regularizer `|x|`; `f64::INFINITY` outside its finiteness domain.
    fn regularizer(&self, x: &Self::Element) -> f64;
    /// Membership in the admissible set `E`.
    fn is_admissible(&self, x: &Self::Element) -> bool;
    /// `d(N̂, N(x))`, nonnegative.
    fn fidelity(&self, x: &Self::Element) -> f64;
}

/// Everything an inner solver needs to know about scale `index`.
#[derive(Debug, Clone)]
pub struct ScaleStep<'a, E> {
    pub index: usize,
    /// Partial sum `σ̃_{n-1}` (zero at scale 0).
    pub base: &'a E,
    pub lambda: f64,
    pub a: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub tol: f64,
}

impl<E> ScaleStep<'_, E> {
    /// `d^α + a |s|^γ` for a partial sum with fidelity `d` and regularizer `s`.
    pub fn augmented(&self, fidelity: f64, reg_sum: f64) -> f64 {
        augmented_value(fidelity, reg_sum, self.a, self.alpha, self.gamma)
    }

    /// `λ (d^α + a |s|^γ) + |σ|^β`.
    pub fn combine(&self, fidelity: f64, reg_sum: f64, reg_increment: f64) -> f64 {
        self.lambda * self.augmented(fidelity, reg_sum) + reg_increment.powf(self.beta)
    }

    /// Full scale objective of the increment `sigma`.
    pub fn objective<P>(&self, problem: &P, sigma: &E) -> f64
    where
        P: MultiscaleProblem<Element = E>,
    {
        let sum = problem.add(self.base, sigma);
        self.combine(
            problem.fidelity(&sum),
            problem.regularizer(&sum),
            problem.regularizer(sigma),
        )
    }
}

/// `d^α + a s^γ`, with the penalty dropped entirely when `a = 0`.
pub fn augmented_value(fidelity: f64, reg_sum: f64, a: f64, alpha: f64, gamma: f64) -> f64 {
    let d = fidelity.powf(alpha);
    if a == 0.0 {
        d
    } else {
        d + a * reg_sum.powf(gamma)
    }
}

/// Result of one inner solve.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution<E> {
    pub increment: E,
    pub iterations: usize,
    /// Whether the solver met its own stopping criterion.
    pub converged: bool,
    /// Solver-specific optimality measure at exit (duality gap, step size, ...).
    pub residual: f64,
}

impl<E> InnerSolution<E> {
    pub fn exact(increment: E) -> Self {
        Self {
            increment,
            iterations: 0,
            converged: true,
            residual: 0.0,
        }
    }
}

/// Approximate minimizer of the scale problem
/// `λ [d(N̂, N(base + σ))^α + a |base + σ|^γ] + |σ|^β`.
pub trait InnerSolver<P: MultiscaleProblem> {
    fn solve(
        &mut self,
        problem: &P,
        step: &ScaleStep<'_, P::Element>,
    ) -> Result<InnerSolution<P::Element>, SolverFailure>;
}

impl<P, F> InnerSolver<P> for F
where
    P: MultiscaleProblem,
    F: FnMut(&P, &ScaleStep<'_, P::Element>) -> Result<InnerSolution<P::Element>, SolverFailure>,
{
    fn solve(
        &mut self,
        problem: &P,
        step: &ScaleStep<'_, P::Element>,
    ) -> Result<InnerSolution<P::Element>, SolverFailure> {
        self(problem, step)
    }
}
