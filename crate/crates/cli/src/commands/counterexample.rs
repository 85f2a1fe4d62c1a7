//! `run-counterexample planar|l2`

use multiscale_counterexamples::{
    run_l2_example, run_planar_counterexample, ArgminOptions, CounterexampleError, L2Config, L2Example, L2Version,
    PlanarConfig,
};

use crate::config::{NumberList, Settings};
use crate::error::CliError;
use crate::output::{Output, RunInfo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Which {
    Planar,
    L2,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    pub which: Which,
    /// Planar: `λ_n = b^n`.
    #[arg(long)]
    pub b: Option<f64>,
    /// Planar: `a_n = c^{-n}`.
    #[arg(long)]
    pub c: Option<f64>,
    /// Planar: curvature of `Ξ̃` below `r_0`.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Planar: first modified annulus.
    #[arg(long)]
    pub nbar: Option<usize>,
    /// Planar: last scale index.
    #[arg(long)]
    pub n_steps: Option<usize>,
    /// Planar: use the radial field everywhere.
    #[arg(long)]
    pub radial: Option<bool>,
    /// Planar: angles and radii of the polar search grid.
    #[arg(long)]
    pub grid: Option<usize>,
    /// ℓ₂: version 1 or 2.
    #[arg(long)]
    pub version: Option<L2Version>,
    /// ℓ₂: truncation dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    /// ℓ₂ version 1: shell radius.
    #[arg(long)]
    pub r0: Option<f64>,
    /// ℓ₂: comma-separated `λ` values; the default depends on the version.
    #[arg(long)]
    pub lambdas: Option<NumberList>,
}

pub enum Params {
    Planar(PlanarConfig, ArgminOptions),
    L2(L2Config, Option<Vec<f64>>),
}

impl Params {
    pub fn name(&self) -> &'static str {
        match self {
            Params::Planar(..) => "run-counterexample planar",
            Params::L2(..) => "run-counterexample l2",
        }
    }
}

pub fn resolve(a: &Args, s: &mut Settings) -> Result<Params, CliError> {
    match a.which {
        Which::Planar => {
            let d = PlanarConfig::default();
            let cfg = PlanarConfig {
                b: s.get("b", a.b, d.b)?,
                c: s.get("c", a.c, d.c)?,
                epsilon: s.get("epsilon", a.epsilon, d.epsilon)?,
                nbar: s.get("nbar", a.nbar, d.nbar)?,
                n_steps: s.get("n_steps", a.n_steps, d.n_steps)?,
                radial: s.get("radial", a.radial, d.radial)?,
            };
            cfg.validate().map_err(|e| CliError::config(e.to_string()))?;
            let grid = s.get("grid", a.grid, ArgminOptions::default().n_angle)?;
            if grid < 16 {
                return Err(CliError::config("grid must be at least 16"));
            }
            let opts = ArgminOptions {
                n_angle: grid,
                n_radius: grid,
                ..ArgminOptions::default()
            };
            Ok(Params::Planar(cfg, opts))
        }
        Which::L2 => {
            let d = L2Config::default();
            let cfg = L2Config {
                dim: s.get("dim", a.dim, d.dim)?,
                version: s.get("version", a.version, d.version)?,
                r0: s.get("r0", a.r0, d.r0)?,
            };
            let lambdas = s.get_opt("lambdas", a.lambdas.clone())?.map(|l| l.0);
            Ok(Params::L2(cfg, lambdas))
        }
    }
}

fn from_example(e: CounterexampleError) -> CliError {
    match e {
        CounterexampleError::Config { .. } | CounterexampleError::Radius { .. } | CounterexampleError::Lambdas(_) => {
            CliError::config(e.to_string())
        }
        CounterexampleError::Solver(m) => CliError::Solver { scale: None, message: m },
    }
}

/// Version 2: one decade above the tail threshold. Version 1: `λ = n⁴`, `n = 4..12`.
fn default_lambdas(cfg: L2Config) -> Result<Vec<f64>, CliError> {
    Ok(match cfg.version {
        L2Version::V2 => {
            let t = L2Example::new(cfg).and_then(|e| e.tail_threshold()).map_err(from_example)?;
            (1..=10).map(|k| t * 10f64.powf(k as f64 / 10.0)).collect()
        }
        L2Version::V1 => (4..=12).map(|n| (n as f64).powi(4)).collect(),
    })
}

pub fn execute(p: &Params, out: &mut Output, info: &mut RunInfo) -> Result<(), CliError> {
    match p {
        Params::Planar(cfg, opts) => {
            info.regime = Some(cfg.schedule().regime().to_string());
            let traj = run_planar_counterexample(*cfg, *opts).map_err(from_example)?;
            out.csv("trajectory.csv", &traj.to_csv())?;
            out.json("trajectory.json", &traj)?;
            for r in &traj.rows {
                say!(
                    "n={} radius={:.12} theta={} expected_radius={:.12}",
                    r.n,
                    r.radius,
                    multiscale_counterexamples::planar::quarter_label(r.quarter_turns),
                    r.expected_radius
                );
            }
            match &traj.precision_abort {
                None => Ok(()),
                Some(a) => Err(CliError::Precision {
                    scale: None,
                    message: a.message.clone(),
                }),
            }
        }
        Params::L2(cfg, lambdas) => {
            let lambdas = match lambdas {
                Some(l) => l.clone(),
                None => default_lambdas(*cfg)?,
            };
            let rep = run_l2_example(*cfg, &lambdas).map_err(from_example)?;
            let untrusted = rep.rows.iter().filter(|r| r.untrusted).count();
            if untrusted > 0 {
                info.warnings.push(format!(
                    "{untrusted} minimizer(s) peak within one coordinate of the truncation dim = {}",
                    cfg.dim
                ));
            }
            out.csv("l2.csv", &rep.to_csv())?;
            out.json("l2.json", &rep)?;
            say_raw!("{}", rep.to_csv());
            Ok(())
        }
    }
}
