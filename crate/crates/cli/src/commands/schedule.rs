//! `check-schedule`

use multiscale_core::{classify_schedule, fmt_f64, ratio_table, ScaleSchedule};

use super::{resolve_schedule, ScheduleArgs, ScheduleDefaults};
use crate::config::Settings;
use crate::error::CliError;
use crate::output::{Output, RunInfo};

#[derive(Debug, clap::Args)]
pub struct Args {
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// Last index of the printed ratio table.
    #[arg(long)]
    pub n: Option<usize>,
}

pub struct Params {
    schedule: ScaleSchedule,
    n: usize,
}

pub fn resolve(a: &Args, s: &mut Settings) -> Result<Params, CliError> {
    let schedule = resolve_schedule(
        &a.schedule,
        s,
        ScheduleDefaults {
            lambda0: 1.0,
            growth: 2.0,
            a0: 0.0,
            decay: 2.0,
            exponents: (2.0, 1.0, 1.0),
            n_max: 64,
        },
    )?;
    let n = s.get("n", a.n, 64)?;
    Ok(Params { schedule, n })
}

pub fn execute(p: &Params, out: &mut Output, info: &mut RunInfo) -> Result<(), CliError> {
    let regime = classify_schedule(&p.schedule);
    info.regime = Some(regime.to_string());
    let rows = ratio_table(&p.schedule, p.n);
    let mut csv = String::from("n,lambda,a,basic_ratio,tight_ratio\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n,
            fmt_f64(r.lambda),
            fmt_f64(r.a),
            fmt_f64(r.basic_ratio),
            fmt_f64(r.tight_ratio)
        ));
    }
    say!("{regime}");
    say_raw!("{csv}");
    out.csv("ratios.csv", &csv)?;
    out.json("ratios.json", &serde_json::json!({ "regime": regime, "rows": rows }))?;
    Ok(())
}
