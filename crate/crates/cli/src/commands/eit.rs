//! `reconstruct-eit`

use std::path::Path;

use multiscale_core::ScaleSchedule;
use multiscale_eit::{
    add_noise, make_phantom, ntd_matrix, reconstruct_multiscale, ClassConfig, ConductivityField, CurrentBasis, Metric,
    NtdMatrix, PhantomSpec, ReconstructError, SolverConfig,
};
use multiscale_tnv::io::{encode_pgm, PgmEncoding};
use multiscale_tnv::TvKind;

use super::{resolve_schedule, ScheduleArgs, ScheduleDefaults};
use crate::config::Settings;
use crate::error::CliError;
use crate::output::{idx, Output, RunInfo};
use crate::Common;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Phantom JSON file, or `centered` for the built-in inclusion.
    #[arg(long)]
    pub phantom: Option<String>,
    /// Measured NtD matrix as CSV; replaces the simulated data.
    #[arg(long)]
    pub data: Option<String>,
    /// Cells per side of the unit square.
    #[arg(long)]
    pub m: Option<usize>,
    /// Number of current patterns.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub a_ell: Option<f64>,
    #[arg(long)]
    pub b_ell: Option<f64>,
    /// `seminorm` or `fullnorm`.
    #[arg(long)]
    pub tv: Option<TvKind>,
    /// `spectral` or `hs`.
    #[arg(long)]
    pub metric: Option<Metric>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// Noise level `η`, in the chosen metric, added to simulated data.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// TV smoothing for the fallback solver, relative to `b_ell − a_ell`.
    #[arg(long)]
    pub epsilon: Option<f64>,
}

pub struct Params {
    truth: Option<ConductivityField>,
    data: Option<NtdMatrix>,
    basis: CurrentBasis,
    class: ClassConfig,
    solver: SolverConfig,
    schedule: ScaleSchedule,
    noise: f64,
}

fn read(path: &str, what: &str) -> Result<String, CliError> {
    std::fs::read_to_string(Path::new(path)).map_err(|e| CliError::config(format!("cannot read {what} `{path}`: {e}")))
}

pub fn resolve(a: &Args, s: &mut Settings) -> Result<Params, CliError> {
    let m = s.get("m", a.m, 16)?;
    let k = s.get("k", a.k, 8)?;
    let basis = CurrentBasis::trig(m, k).map_err(|e| CliError::config(e.to_string()))?;
    let class = ClassConfig {
        a_ell: s.get("a_ell", a.a_ell, 0.5)?,
        b_ell: s.get("b_ell", a.b_ell, 2.5)?,
        kind: s.get("tv", a.tv, TvKind::FullNorm)?,
    };
    let defaults = SolverConfig::default();
    let solver = SolverConfig {
        metric: s.get("metric", a.metric, Metric::Spectral)?,
        max_iter: s.get("max_iter", a.max_iter, defaults.max_iter)?,
        tol: s.get("tol", a.tol, defaults.tol)?,
        epsilon: s.get("epsilon", a.epsilon, defaults.epsilon)?,
    };
    let schedule = resolve_schedule(
        &a.schedule,
        s,
        ScheduleDefaults {
            lambda0: 4.0,
            growth: 8.0,
            a0: 1.0,
            decay: 2.0,
            exponents: (2.0, 1.0, 1.0),
            n_max: 5,
        },
    )?;
    let noise = s.get("noise", a.noise, 0.0)?;
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(CliError::config(format!("noise must be a nonnegative number (got {noise})")));
    }
    let data = match s.get_opt("data", a.data.clone())? {
        Some(path) => {
            let text = read(&path, "NtD data")?;
            Some(NtdMatrix::from_csv(&text, m, &basis.id).map_err(|e| CliError::config(format!("`{path}`: {e}")))?)
        }
        None => None,
    };
    let truth = if data.is_none() {
        let name: String = s.get("phantom", a.phantom.clone(), "centered".to_string())?;
        let spec = if name == "centered" {
            PhantomSpec::centered_inclusion()
        } else {
            PhantomSpec::from_json(&read(&name, "phantom")?).map_err(|e| CliError::config(format!("`{name}`: {e}")))?
        };
        Some(make_phantom(&spec, m).map_err(|e| CliError::config(e.to_string()))?)
    } else {
        None
    };
    Ok(Params {
        truth,
        data,
        basis,
        class,
        solver,
        schedule,
        noise,
    })
}

fn field_pgm(f: &ConductivityField) -> Vec<u8> {
    let span = f.b_ell - f.a_ell;
    encode_pgm(&f.to_image().map(|v| (v - f.a_ell) / span), 255, PgmEncoding::Binary)
}

pub fn execute(p: &Params, common: &Common, out: &mut Output, info: &mut RunInfo) -> Result<(), CliError> {
    info.regime = Some(p.schedule.regime().to_string());
    let nhat = match (&p.data, &p.truth) {
        (Some(d), _) => d.clone(),
        (None, Some(truth)) => {
            out.csv("truth.csv", &truth.to_csv())?;
            out.pgm("truth.pgm", &field_pgm(truth))?;
            let clean = ntd_matrix(truth, &p.basis).map_err(|e| CliError::Solver {
                scale: None,
                message: e.to_string(),
            })?;
            if p.noise > 0.0 {
                out.csv("ntd_clean.csv", &clean.to_csv())?;
                add_noise(&clean, p.noise, common.seed, p.solver.metric).map_err(|e| CliError::config(e.to_string()))?
            } else {
                clean
            }
        }
        (None, None) => unreachable!("resolve always sets data or truth"),
    };
    out.csv("ntd_data.csv", &nhat.to_csv())?;
    let (rec, err) = match reconstruct_multiscale(&nhat, &p.basis, &p.schedule, p.class, p.solver) {
        Ok(r) => (Some(r), None),
        Err((e, partial)) => (partial, Some(e)),
    };
    if let Some(rec) = &rec {
        info.warnings.extend(rec.warnings.iter().cloned());
        for (n, f) in rec.fields.iter().enumerate() {
            out.csv(&format!("sigma_{}.csv", idx(n)), &f.to_csv())?;
            out.pgm(&format!("sigma_{}.pgm", idx(n)), &field_pgm(f))?;
        }
        if let Some(last) = rec.fields.last() {
            if let Ok(n) = ntd_matrix(last, &p.basis) {
                out.csv("ntd_final.csv", &n.to_csv())?;
            }
        }
        out.csv("summary.csv", &rec.trace.to_csv())?;
        out.json("trace.json", &rec.trace.to_json())?;
    }
    match err {
        None => Ok(()),
        Some(ReconstructError::Input(e)) => Err(CliError::config(e.to_string())),
        Some(ReconstructError::Step(e)) => Err(e.into()),
    }
}
