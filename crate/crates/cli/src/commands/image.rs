//! `decompose-image`

use std::path::Path;

use multiscale_core::{ScaleSchedule, ScheduleRegime};
use multiscale_tnv::io::{encode_csv, encode_pgm, load_csv, load_pgm, PgmEncoding};
use multiscale_tnv::phantom::block_phantom;
use multiscale_tnv::{energy_csv, energy_identity_report, tnv_decompose, ImageGrid, TnvError, TvKind, TvRegularizer};

use super::{resolve_schedule, ScheduleArgs, ScheduleDefaults};
use crate::config::Settings;
use crate::error::CliError;
use crate::output::{idx, Output, RunInfo};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// `.pgm` or `.csv` image, or `phantom` for the built-in 32×32 phantom.
    #[arg(long)]
    pub input: Option<String>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// `seminorm` or `fullnorm`.
    #[arg(long)]
    pub tv: Option<TvKind>,
    /// Relative primal-dual gap per scale.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

pub struct Params {
    image: ImageGrid,
    schedule: ScaleSchedule,
    tv: TvKind,
    tol: f64,
    max_iter: usize,
}

fn load(input: &str) -> Result<ImageGrid, CliError> {
    if input == "phantom" {
        return Ok(block_phantom());
    }
    let path = Path::new(input);
    if !path.is_file() {
        return Err(CliError::config(format!("input image `{input}` does not exist")));
    }
    let lower = input.to_ascii_lowercase();
    let res = if lower.ends_with(".pgm") {
        load_pgm(path)
    } else if lower.ends_with(".csv") {
        load_csv(path)
    } else {
        return Err(CliError::config(format!("input image `{input}` must end in .pgm or .csv")));
    };
    res.map_err(|e| CliError::config(format!("cannot read input image `{input}`: {e}")))
}

pub fn resolve(a: &Args, s: &mut Settings) -> Result<Params, CliError> {
    let input: String = s.get("input", a.input.clone(), "phantom".to_string())?;
    let image = load(&input)?;
    let schedule = resolve_schedule(
        &a.schedule,
        s,
        ScheduleDefaults {
            lambda0: 0.05,
            growth: 2.0,
            a0: 0.0,
            decay: 1.0,
            exponents: (2.0, 1.0, 1.0),
            n_max: 12,
        },
    )?;
    if schedule.regime() != ScheduleRegime::Basic {
        return Err(CliError::config(format!(
            "image decomposition needs a basic schedule (a0 = 0, growth >= 2^beta); got {}",
            schedule.regime()
        )));
    }
    Ok(Params {
        image,
        schedule,
        tv: s.get("tv", a.tv, TvKind::Seminorm)?,
        tol: s.get("tol", a.tol, 1e-8)?,
        max_iter: s.get("max_iter", a.max_iter, 10_000_000)?,
    })
}

/// Grey levels for display: layers are centred at 1/2, sums scaled to `[0, 1]`.
fn display(g: &ImageGrid, scale: f64, centred: bool) -> Vec<u8> {
    let s = if scale > 0.0 { scale } else { 1.0 };
    let mapped = if centred {
        g.map(|v| 0.5 + 0.5 * v / s)
    } else {
        g.map(|v| v / s)
    };
    encode_pgm(&mapped, 255, PgmEncoding::Binary)
}

pub fn execute(p: &Params, out: &mut Output, info: &mut RunInfo) -> Result<(), CliError> {
    info.regime = Some(p.schedule.regime().to_string());
    let (d, err) = match tnv_decompose(&p.image, &p.schedule, TvRegularizer::of_kind(p.tv), p.tol, p.max_iter) {
        Ok(d) => (Some(d), None),
        Err((e, partial)) => (partial, Some(e)),
    };
    if let Some(d) = &d {
        let scale = p.image.max_abs();
        for (n, u) in d.layers().iter().enumerate() {
            out.csv(&format!("layer_{}.csv", idx(n)), &encode_csv(u))?;
            out.pgm(&format!("layer_{}.pgm", idx(n)), &display(u, scale, true))?;
        }
        for (n, sum) in d.trace.partial_sums.iter().enumerate() {
            out.pgm(&format!("sum_{}.pgm", idx(n)), &display(sum, scale, false))?;
        }
        out.csv("energy.csv", &energy_csv(&energy_identity_report(d)))?;
        let mut norms = String::from("n,residual_norm\n");
        for (n, v) in d.residual_norms().iter().enumerate() {
            norms.push_str(&format!("{n},{}\n", multiscale_core::fmt_f64(*v)));
        }
        out.csv("residuals.csv", &norms)?;
        out.csv("summary.csv", &d.trace.to_csv())?;
        out.json("trace.json", &d.trace.to_json())?;
    }
    match err {
        None => Ok(()),
        Some(TnvError::Regime { .. }) => Err(CliError::config(err.unwrap().to_string())),
        Some(TnvError::Step(e)) => Err(e.into()),
    }
}
