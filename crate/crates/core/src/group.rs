//! The multiscale iteration on a group with a left-invariant distance.
//!
//! Increments are composed rather than added:
//! `ψ̃_n = ψ̃_{n-1} · ψ_n`, where `ψ_n` minimizes
//!
//! ```text
//! λ_n [ d_Y(N̂, N(ψ̃_{n-1} ψ))^α + a_n d(ψ̃_{n-1} ψ, e)^γ ] + d(ψ, e)^β
//! ```

use std::fmt::Debug;

use serde::Serialize;

use crate::error::{RunError, SolverFailure, StepError};
use crate::problem::{augmented_value, InnerSolution, InnerSolver, MultiscaleProblem, ScaleStep};
use crate::schedule::{ScaleSchedule, ScheduleRegime};
use crate::trace::{export_json, summary_csv, ScaleReport, SummaryRow};

/// A group with a left-invariant distance and a fidelity functional.
pub trait GroupProblem {
    type Element: Clone + PartialEq + Debug;

    fn identity(&self) -> Self::Element;
    fn compose(&self, g: &Self::Element, h: &Self::Element) -> Self::Element;
    fn inverse(&self, g: &Self::Element) -> Self::Element;
    /// Left-invariant distance `d(g, h)`.
    fn distance(&self, g: &Self::Element, h: &Self::Element) -> f64;
    fn fidelity(&self, g: &Self::Element) -> f64;
    /// Short tag written into exported traces.
    fn name(&self) -> &str;

    fn distance_to_identity(&self, g: &Self::Element) -> f64 {
        self.distance(g, &self.identity())
    }
}

#[derive(Debug, Clone)]
pub struct GroupStep<'a, G> {
    pub index: usize,
    /// Composition `ψ̃_{n-1}` (identity at scale 0).
    pub base: &'a G,
    pub lambda: f64,
    pub a: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub tol: f64,
}

impl<G> GroupStep<'_, G> {
    pub fn objective<P>(&self, problem: &P, psi: &G) -> f64
    where
        P: GroupProblem<Element = G>,
    {
        let comp = problem.compose(self.base, psi);
        let aug = augmented_value(
            problem.fidelity(&comp),
            problem.distance_to_identity(&comp),
            self.a,
            self.alpha,
            self.gamma,
        );
        self.lambda * aug + problem.distance_to_identity(psi).powf(self.beta)
    }
}

pub trait GroupSolver<P: GroupProblem> {
    fn solve(
        &mut self,
        problem: &P,
        step: &GroupStep<'_, P::Element>,
    ) -> Result<InnerSolution<P::Element>, SolverFailure>;
}

/// History of a group multiscale run.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupTrace<G> {
    pub group: String,
    pub schedule: ScaleSchedule,
    pub regime: ScheduleRegime,
    pub increments: Vec<G>,
    pub compositions: Vec<G>,
    pub fidelity: Vec<f64>,
    /// `d(ψ_n, e)`
    pub increment_distance: Vec<f64>,
    /// `d(ψ̃_n, e)`
    pub composition_distance: Vec<f64>,
    pub augmented: Vec<f64>,
    pub reports: Vec<ScaleReport>,
}

/// One row of [`GroupTrace::distance_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceRow {
    pub n: usize,
    pub increment_distance: f64,
    pub composition_distance: f64,
    pub fidelity: f64,
}

impl<G> GroupTrace<G> {
    fn new(group: &str, schedule: ScaleSchedule) -> Self {
        Self {
            group: group.to_string(),
            regime: schedule.regime(),
            schedule,
            increments: Vec::new(),
            compositions: Vec::new(),
            fidelity: Vec::new(),
            increment_distance: Vec::new(),
            composition_distance: Vec::new(),
            augmented: Vec::new(),
            reports: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.fidelity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fidelity.is_empty()
    }

    pub fn distance_report(&self) -> Vec<DistanceRow> {
        (0..self.len())
            .map(|n| DistanceRow {
                n,
                increment_distance: self.increment_distance[n],
                composition_distance: self.composition_distance[n],
                fidelity: self.fidelity[n],
            })
            .collect()
    }

    /// Rows in the same layout as the Banach-space trace.
    pub fn summary(&self) -> Vec<SummaryRow> {
        (0..self.len())
            .map(|n| SummaryRow {
                n,
                fidelity: self.fidelity[n],
                augmented: self.augmented[n],
                reg_increment: self.increment_distance[n],
                reg_sum: self.composition_distance[n],
                safeguard_used: self.reports[n].safeguard_used,
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        export_json(&self.schedule, self.regime, Some(&self.group), &self.summary())
    }

    pub fn to_csv(&self) -> String {
        summary_csv(&self.summary())
    }
}

/// Echoes the stored distances and fidelities of a trace.
pub fn group_distance_report<G>(trace: &GroupTrace<G>) -> Vec<DistanceRow> {
    trace.distance_report()
}

/// Runs the group iteration with the identity-increment safeguard.
pub fn run_group_multiscale<P, S>(
    problem: &P,
    schedule: &ScaleSchedule,
    solver: &mut S,
    tol: f64,
) -> Result<GroupTrace<P::Element>, RunError<GroupTrace<P::Element>>>
where
    P: GroupProblem,
    S: GroupSolver<P>,
{
    let mut trace = GroupTrace::new(problem.name(), *schedule);
    if let Err(e) = schedule.validate() {
        return Err(RunError {
            error: e.into(),
            partial: Box::new(trace),
        });
    }
    let a_values = schedule.a_values();
    let e = problem.identity();
    let e_dist = problem.distance_to_identity(&e);
    let mut base = e.clone();
    let mut base_fid = problem.fidelity(&base);
    let mut base_dist = problem.distance_to_identity(&base);

    for n in 0..=schedule.n_max {
        let step = GroupStep {
            index: n,
            base: &base,
            lambda: schedule.lambda(n),
            a: a_values[n],
            alpha: schedule.alpha,
            beta: schedule.beta,
            gamma: schedule.gamma,
            tol,
        };
        let fail = |error: StepError, trace: GroupTrace<P::Element>| RunError {
            error,
            partial: Box::new(trace),
        };
        let sol = match solver.solve(problem, &step) {
            Ok(s) => s,
            Err(source) => return Err(fail(StepError::Solver { scale: n, source }, trace)),
        };
        let inc_dist = problem.distance_to_identity(&sol.increment);
        if !inc_dist.is_finite() {
            return Err(fail(StepError::InfiniteRegularizer { scale: n }, trace));
        }
        let cand_comp = problem.compose(&base, &sol.increment);
        let cand_fid = problem.fidelity(&cand_comp);
        let cand_dist = problem.distance_to_identity(&cand_comp);
        let cand_aug = augmented_value(cand_fid, cand_dist, step.a, step.alpha, step.gamma);
        let cand_obj = step.lambda * cand_aug + inc_dist.powf(step.beta);
        if cand_obj.is_nan() {
            return Err(fail(StepError::NonFinite { scale: n }, trace));
        }
        let id_aug = augmented_value(base_fid, base_dist, step.a, step.alpha, step.gamma);
        let id_obj = step.lambda * id_aug + e_dist.powf(step.beta);
        let candidate_wins = cand_obj <= id_obj && cand_aug <= id_aug;

        let (inc, fid, dist, idist, aug, obj) = if candidate_wins {
            (sol.increment, cand_fid, cand_dist, inc_dist, cand_aug, cand_obj)
        } else {
            (e.clone(), base_fid, base_dist, e_dist, id_aug, id_obj)
        };
        let comp = problem.compose(&base, &inc);
        trace.reports.push(ScaleReport {
            iterations: sol.iterations,
            converged: sol.converged,
            solver_residual: sol.residual,
            objective: obj,
            candidate_objective: cand_obj,
            safeguard_used: !candidate_wins,
        });
        trace.increments.push(inc);
        trace.compositions.push(comp.clone());
        trace.fidelity.push(fid);
        trace.increment_distance.push(idist);
        trace.composition_distance.push(dist);
        trace.augmented.push(aug);
        base = comp;
        base_fid = fid;
        base_dist = dist;
    }
    Ok(trace)
}

/// A vector space viewed as a group under addition, with `d(g, h) = |g − h|`.
#[derive(Debug, Clone)]
pub struct TranslationGroup<P> {
    pub space: P,
}

impl<P> TranslationGroup<P> {
    pub fn new(space: P) -> Self {
        Self { space }
    }
}

impl<P: MultiscaleProblem> GroupProblem for TranslationGroup<P> {
    type Element = P::Element;

    fn identity(&self) -> Self::Element {
        self.space.zero()
    }

    fn compose(&self, g: &Self::Element, h: &Self::Element) -> Self::Element {
        self.space.add(g, h)
    }

    fn inverse(&self, g: &Self::Element) -> Self::Element {
        self.space.negate(g)
    }

    fn distance(&self, g: &Self::Element, h: &Self::Element) -> f64 {
        self.space.regularizer(&self.space.add(g, &self.space.negate(h)))
    }

    fn distance_to_identity(&self, g: &Self::Element) -> f64 {
        self.space.regularizer(g)
    }

    fn fidelity(&self, g: &Self::Element) -> f64 {
        self.space.fidelity(g)
    }

    fn name(&self) -> &str {
        "translation"
    }
}

/// Lets a Banach-space inner solver drive the translation-group iteration.
#[derive(Debug, Clone)]
pub struct BanachSolverAdapter<S> {
    pub inner: S,
}

impl<S> BanachSolverAdapter<S> {
    pub fn new(inner: S) -> Self {
        Self { inner }
    }
}

impl<P, S> GroupSolver<TranslationGroup<P>> for BanachSolverAdapter<S>
where
    P: MultiscaleProblem,
    S: InnerSolver<P>,
{
    fn solve(
        &mut self,
        problem: &TranslationGroup<P>,
        step: &GroupStep<'_, P::Element>,
    ) -> Result<InnerSolution<P::Element>, SolverFailure> {
        let scale = ScaleStep {
            index: step.index,
            base: step.base,
            lambda: step.lambda,
            a: step.a,
            alpha: step.alpha,
            beta: step.beta,
            gamma: step.gamma,
            tol: step.tol,
        };
        self.inner.solve(&problem.space, &scale)
    }
}
