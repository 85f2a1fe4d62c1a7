pub mod counterexample;
pub mod eit;
pub mod image;
pub mod schedule;
pub mod shift;

use multiscale_core::ScaleSchedule;

use crate::config::Settings;
use crate::error::CliError;
use crate::output::{Output, RunInfo};
use crate::Common;

/// A subcommand with all of its settings resolved.
pub enum Plan {
    Image(image::Params),
    Eit(eit::Params),
    Shift(shift::Params),
    Counterexample(counterexample::Params),
    Schedule(schedule::Params),
}

impl Plan {
    pub fn name(&self) -> &'static str {
        match self {
            Plan::Image(_) => "decompose-image",
            Plan::Eit(_) => "reconstruct-eit",
            Plan::Shift(_) => "register-shift",
            Plan::Counterexample(p) => p.name(),
            Plan::Schedule(_) => "check-schedule",
        }
    }

    pub fn execute(&self, common: &Common, out: &mut Output, info: &mut RunInfo) -> Result<(), CliError> {
        match self {
            Plan::Image(p) => image::execute(p, out, info),
            Plan::Eit(p) => eit::execute(p, common, out, info),
            Plan::Shift(p) => shift::execute(p, out, info),
            Plan::Counterexample(p) => counterexample::execute(p, out, info),
            Plan::Schedule(p) => schedule::execute(p, out, info),
        }
    }
}

/// Schedule flags shared by the iterative subcommands.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct ScheduleArgs {
    /// `λ_0`
    #[arg(long)]
    pub lambda0: Option<f64>,
    /// Ratio `λ_{n+1}/λ_n`.
    #[arg(long)]
    pub growth: Option<f64>,
    /// `a_0`; zero gives the basic iteration.
    #[arg(long)]
    pub a0: Option<f64>,
    /// Ratio `a_n/a_{n+1}`.
    #[arg(long)]
    pub decay: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Last scale index.
    #[arg(long)]
    pub n_max: Option<usize>,
}

/// Defaults for [`resolve_schedule`].
pub struct ScheduleDefaults {
    pub lambda0: f64,
    pub growth: f64,
    pub a0: f64,
    pub decay: f64,
    pub exponents: (f64, f64, f64),
    pub n_max: usize,
}

pub fn resolve_schedule(a: &ScheduleArgs, s: &mut Settings, d: ScheduleDefaults) -> Result<ScaleSchedule, CliError> {
    let sched = ScaleSchedule {
        lambda0: s.get("lambda0", a.lambda0, d.lambda0)?,
        lambda_growth: s.get("growth", a.growth, d.growth)?,
        a0: s.get("a0", a.a0, d.a0)?,
        a_decay: s.get("decay", a.decay, d.decay)?,
        alpha: s.get("alpha", a.alpha, d.exponents.0)?,
        beta: s.get("beta", a.beta, d.exponents.1)?,
        gamma: s.get("gamma", a.gamma, d.exponents.2)?,
        n_max: s.get("n_max", a.n_max, d.n_max)?,
    };
    sched.validate().map_err(|e| CliError::config(e.to_string()))?;
    Ok(sched)
}
