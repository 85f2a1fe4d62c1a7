//! The multiscale driver and the single-step baseline.

use crate::error::{RunError, StepError};
use crate::problem::{augmented_value, InnerSolver, MultiscaleProblem, ScaleStep};
use crate::schedule::ScaleSchedule;
use crate::trace::{DecompositionTrace, ScaleReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Tolerance forwarded to the inner solver.
    pub tol: f64,
    /// Stop after the first scale whose fidelity is at most this value.
    pub delta_target: Option<f64>,
}

impl RunOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            delta_target: None,
        }
    }
}

/// Runs scales `0..=n_max` of the (tight) multiscale iteration.
///
/// The candidate of each inner solve is accepted only if it does not raise
/// the scale objective above that of the zero increment and does not raise
/// the augmented value `d^α + a_n |σ̃|^γ` above its zero-increment value.
/// The zero path reuses the stored fidelity and regularizer of the previous
/// partial sum, so the augmented sequence is nonincreasing in floating point
/// whatever the quality of the solver.
pub fn run_multiscale<P, S>(
    problem: &P,
    schedule: &ScaleSchedule,
    solver: &mut S,
    opts: RunOptions,
) -> Result<DecompositionTrace<P::Element>, RunError<DecompositionTrace<P::Element>>>
where
    P: MultiscaleProblem,
    S: InnerSolver<P>,
{
    let mut trace = DecompositionTrace::new(*schedule);
    if let Err(e) = schedule.validate() {
        return Err(RunError {
            error: e.into(),
            partial: Box::new(trace),
        });
    }
    let a_values = schedule.a_values();
    let zero = problem.zero();
    let zero_reg = problem.regularizer(&zero);
    let mut base = zero.clone();
    let mut base_fid = problem.fidelity(&base);
    let mut base_reg = problem.regularizer(&base);

    for n in 0..=schedule.n_max {
        let step = ScaleStep {
            index: n,
            base: &base,
            lambda: schedule.lambda(n),
            a: a_values[n],
            alpha: schedule.alpha,
            beta: schedule.beta,
            gamma: schedule.gamma,
            tol: opts.tol,
        };
        let outcome = scale_step(problem, solver, &step, &zero, zero_reg, base_fid, base_reg);
        let accepted = match outcome {
            Ok(acc) => acc,
            Err(error) => {
                return Err(RunError {
                    error,
                    partial: Box::new(trace),
                })
            }
        };
        let sum = problem.add(&base, &accepted.increment);
        base_fid = accepted.fidelity;
        base_reg = accepted.reg_sum;
        trace.increments.push(accepted.increment);
        trace.partial_sums.push(sum.clone());
        trace.fidelity.push(accepted.fidelity);
        trace.regularizer_of_sum.push(accepted.reg_sum);
        trace.regularizer_of_increment.push(accepted.reg_increment);
        trace.augmented.push(accepted.augmented);
        trace.reports.push(accepted.report);
        base = sum;
        if let Some(target) = opts.delta_target {
            if base_fid <= target {
                break;
            }
        }
    }
    Ok(trace)
}

struct Accepted<E> {
    increment: E,
    fidelity: f64,
    reg_sum: f64,
    reg_increment: f64,
    augmented: f64,
    report: ScaleReport,
}

fn scale_step<P, S>(
    problem: &P,
    solver: &mut S,
    step: &ScaleStep<'_, P::Element>,
    zero: &P::Element,
    zero_reg: f64,
    base_fid: f64,
    base_reg: f64,
) -> Result<Accepted<P::Element>, StepError>
where
    P: MultiscaleProblem,
    S: InnerSolver<P>,
{
    let n = step.index;
    let sol = solver
        .solve(problem, step)
        .map_err(|source| StepError::Solver { scale: n, source })?;
    let cand_sum = problem.add(step.base, &sol.increment);
    if !problem.is_admissible(&cand_sum) {
        return Err(StepError::Inadmissible { scale: n });
    }
    let cand_reg_inc = problem.regularizer(&sol.increment);
    if !cand_reg_inc.is_finite() {
        return Err(StepError::InfiniteRegularizer { scale: n });
    }
    let cand_fid = problem.fidelity(&cand_sum);
    let cand_reg_sum = problem.regularizer(&cand_sum);
    let cand_aug = augmented_value(cand_fid, cand_reg_sum, step.a, step.alpha, step.gamma);
    let cand_obj = step.lambda * cand_aug + cand_reg_inc.powf(step.beta);
    if cand_obj.is_nan() {
        return Err(StepError::NonFinite { scale: n });
    }

    let zero_aug = augmented_value(base_fid, base_reg, step.a, step.alpha, step.gamma);
    let zero_obj = step.lambda * zero_aug + zero_reg.powf(step.beta);
    let zero_allowed = n > 0 || problem.is_admissible(step.base);
    let candidate_wins = cand_obj <= zero_obj && cand_aug <= zero_aug;

    if zero_allowed && !candidate_wins {
        Ok(Accepted {
            increment: zero.clone(),
            fidelity: base_fid,
            reg_sum: base_reg,
            reg_increment: zero_reg,
            augmented: zero_aug,
            report: ScaleReport {
                iterations: sol.iterations,
                converged: sol.converged,
                solver_residual: sol.residual,
                objective: zero_obj,
                candidate_objective: cand_obj,
                safeguard_used: true,
            },
        })
    } else {
        Ok(Accepted {
            increment: sol.increment,
            fidelity: cand_fid,
            reg_sum: cand_reg_sum,
            reg_increment: cand_reg_inc,
            augmented: cand_aug,
            report: ScaleReport {
                iterations: sol.iterations,
                converged: sol.converged,
                solver_residual: sol.residual,
                objective: cand_obj,
                candidate_objective: cand_obj,
                safeguard_used: false,
            },
        })
    }
}

/// Result of [`single_step_regularized`].
#[derive(Debug, Clone, PartialEq)]
pub struct SingleStep<E> {
    pub sigma: E,
    pub fidelity: f64,
    pub objective: f64,
    pub safeguard_used: bool,
}

/// Minimizes `λ d(N̂, N(σ))^α + |σ|^β` once, with the zero safeguard.
pub fn single_step_regularized<P, S>(
    problem: &P,
    lambda: f64,
    alpha: f64,
    beta: f64,
    solver: &mut S,
    tol: f64,
) -> Result<SingleStep<P::Element>, StepError>
where
    P: MultiscaleProblem,
    S: InnerSolver<P>,
{
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(crate::error::ScheduleError::Invalid {
            field: "lambda",
            value: lambda,
        }
        .into());
    }
    let zero = problem.zero();
    let step = ScaleStep {
        index: 0,
        base: &zero,
        lambda,
        a: 0.0,
        alpha,
        beta,
        gamma: 1.0,
        tol,
    };
    let acc = scale_step(
        problem,
        solver,
        &step,
        &zero,
        problem.regularizer(&zero),
        problem.fidelity(&zero),
        problem.regularizer(&zero),
    )?;
    Ok(SingleStep {
        sigma: acc.increment,
        fidelity: acc.fidelity,
        objective: acc.report.objective,
        safeguard_used: acc.report.safeguard_used,
    })
}
