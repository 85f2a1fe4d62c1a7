//! `register-shift`

use std::path::Path;

use multiscale_core::circle::{shift_signal, CircleShiftProblem, ScanGoldenSolver};
use multiscale_core::{fmt_f64, run_group_multiscale, ScaleSchedule};

use super::{resolve_schedule, ScheduleArgs, ScheduleDefaults};
use crate::config::Settings;
use crate::error::CliError;
use crate::output::{Output, RunInfo};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Reference signal, one value per line; defaults to a two-harmonic test signal.
    #[arg(long)]
    pub reference: Option<String>,
    /// Signal to register; defaults to the reference delayed by `--shift`.
    #[arg(long)]
    pub target: Option<String>,
    /// Samples of the built-in test signal.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Delay, in periods, applied to build the default target.
    #[arg(long)]
    pub shift: Option<f64>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// Equispaced candidates of the coarse scan.
    #[arg(long)]
    pub candidates: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

pub struct Params {
    problem: CircleShiftProblem,
    schedule: ScaleSchedule,
    solver: ScanGoldenSolver,
    tol: f64,
}

/// `sin x + sin(2x + 1)/2` sampled at `m` points of one period.
pub fn test_signal(m: usize) -> Vec<f64> {
    (0..m)
        .map(|k| {
            let x = k as f64 / m as f64 * std::f64::consts::TAU;
            x.sin() + 0.5 * (2.0 * x + 1.0).sin()
        })
        .collect()
}

fn read_signal(path: &str) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(Path::new(path))
        .map_err(|e| CliError::config(format!("cannot read signal `{path}`: {e}")))?;
    text.split(|c: char| c == '\n' || c == ',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| CliError::config(format!("`{path}`: `{t}` is not a number"))))
        .collect()
}

pub fn resolve(a: &Args, s: &mut Settings) -> Result<Params, CliError> {
    let i0 = match s.get_opt("reference", a.reference.clone())? {
        Some(p) => read_signal(&p)?,
        None => {
            let m = s.get("samples", a.samples, 128)?;
            if m < 2 {
                return Err(CliError::config("samples must be at least 2"));
            }
            test_signal(m)
        }
    };
    let i1 = match s.get_opt("target", a.target.clone())? {
        Some(p) => read_signal(&p)?,
        None => shift_signal(&i0, s.get("shift", a.shift, 0.3)?),
    };
    let problem = CircleShiftProblem::new(i0, i1).map_err(CliError::Config)?;
    let schedule = resolve_schedule(
        &a.schedule,
        s,
        ScheduleDefaults {
            lambda0: 1.0,
            growth: 8.0,
            a0: 1.0,
            decay: 2.0,
            exponents: (2.0, 1.0, 1.0),
            n_max: 8,
        },
    )?;
    let defaults = ScanGoldenSolver::default();
    let candidates = s.get("candidates", a.candidates, defaults.candidates)?;
    if candidates == 0 {
        return Err(CliError::config("candidates must be at least 1"));
    }
    Ok(Params {
        problem,
        schedule,
        solver: ScanGoldenSolver {
            candidates,
            ..defaults
        },
        tol: s.get("tol", a.tol, 1e-12)?,
    })
}

pub fn execute(p: &Params, out: &mut Output, info: &mut RunInfo) -> Result<(), CliError> {
    info.regime = Some(p.schedule.regime().to_string());
    let mut solver = p.solver;
    let (trace, err) = match run_group_multiscale(&p.problem, &p.schedule, &mut solver, p.tol) {
        Ok(t) => (t, None),
        Err(e) => (*e.partial, Some(e.error)),
    };
    let mut csv = String::from("n,increment,composition,increment_distance,composition_distance,fidelity\n");
    for n in 0..trace.len() {
        csv.push_str(&format!(
            "{n},{},{},{},{},{}\n",
            fmt_f64(trace.increments[n]),
            fmt_f64(trace.compositions[n]),
            fmt_f64(trace.increment_distance[n]),
            fmt_f64(trace.composition_distance[n]),
            fmt_f64(trace.fidelity[n])
        ));
    }
    out.csv("shifts.csv", &csv)?;
    out.csv("summary.csv", &trace.to_csv())?;
    out.json("trace.json", &trace.to_json())?;
    match err {
        None => Ok(()),
        Some(e) => Err(e.into()),
    }
}
