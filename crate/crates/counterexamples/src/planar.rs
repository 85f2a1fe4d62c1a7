//! The planar counterexample: a tight multiscale iteration in `R²` whose
//! partial sums keep their radii `r_n → 1` but rotate by a quarter turn every
//! two scales, so two subsequences converge to different points of the
//! solution set `∂B_1`.
//!
//! Every quantity of the form `1 − h_n`, `1 − Ξ̃(r)` or `1 − N(x)` is computed
//! directly as a gap from its defining formula. At `c = 9` the gaps at scale
//! 8 are about `3e-12`, far below what `1 − h` would resolve.

use std::f64::consts::{FRAC_PI_2, TAU};

use multiscale_core::{
    run_multiscale, InnerSolution, InnerSolver, MultiscaleProblem, RunOptions, ScaleSchedule,
    ScaleStep, SolverFailure,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::CounterexampleError;

/// Smallest gap `1 − h_n` trusted in double precision.
pub const PRECISION_FLOOR: f64 = 1e3 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarConfig {
    pub b: f64,
    pub c: f64,
    /// Curvature of `Ξ̃` below `r_0`.
    pub epsilon: f64,
    /// First modified annulus `s_{2n̄} ≤ ‖x‖ ≤ s_{2n̄+1}`.
    pub nbar: usize,
    /// Last scale index computed.
    pub n_steps: usize,
    /// Replace `N` by the radial `Ξ` everywhere.
    pub radial: bool,
}

impl Default for PlanarConfig {
    fn default() -> Self {
        Self {
            b: 90.0,
            c: 9.0,
            epsilon: 1.0,
            nbar: 1,
            n_steps: 8,
            radial: false,
        }
    }
}

impl PlanarConfig {
    pub fn validate(&self) -> Result<(), CounterexampleError> {
        let bad = |field: &'static str, value: f64, reason: &'static str| {
            Err(CounterexampleError::Config { field, value, reason })
        };
        if !(self.c.is_finite() && self.c >= 9.0) {
            return bad("c", self.c, "must be at least 9");
        }
        if !(self.b.is_finite() && self.b / self.c > 2.0) {
            return bad("b", self.b, "b/c must exceed 2");
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad("epsilon", self.epsilon, "must be positive");
        }
        if !self.radial {
            if self.nbar == 0 {
                return bad("nbar", 0.0, "must be at least 1");
            }
            let ratio = (self.b / (2.0 * self.c)).powi(2 * self.nbar as i32 + 1);
            if !(ratio > 64.0) {
                return bad("nbar", self.nbar as f64, "needs (b/(2c))^(2 nbar + 1) > 64");
            }
        }
        Ok(())
    }

    /// `λ_n = b^n`, `a_n = c^{-n}`, `α = β = γ = 1`.
    pub fn schedule(&self) -> ScaleSchedule {
        ScaleSchedule::tight(1.0, self.b, 1.0, self.c, (1.0, 1.0, 1.0), self.n_steps)
    }

    /// `1 − h_n`.
    pub fn gap(&self, n: usize) -> f64 {
        let k = -(n as i32 + 1);
        9.0 / 8.0 * (self.c.powi(k) + self.b.powi(k)) * 0.5f64.powi(n as i32 + 2)
    }
}

/// `r_n = 1 − 2^{-(n+1)}`, with `r_{-1} = 0` for `n = -1`.
pub fn r_seq(n: i64) -> f64 {
    if n < 0 {
        0.0
    } else {
        1.0 - 0.5f64.powi(n as i32 + 1)
    }
}

/// `s_n = r_n + (r_{n+1} − r_n)/2`.
pub fn s_seq(n: usize) -> f64 {
    r_seq(n as i64) + 0.5f64.powi(n as i32 + 3)
}

/// `(r_n, s_n, 1 − h_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanarSequences {
    pub r: f64,
    pub s: f64,
    pub one_minus_h: f64,
}

pub fn planar_sequences(n: usize, cfg: &PlanarConfig) -> PlanarSequences {
    PlanarSequences {
        r: r_seq(n as i64),
        s: s_seq(n),
        one_minus_h: cfg.gap(n),
    }
}

/// `1 − Ξ̃(r)` for `r ≥ 0`.
pub fn xi_gap(r: f64, cfg: &PlanarConfig) -> f64 {
    let r0 = r_seq(0);
    if r <= r0 {
        let d = r - r0;
        return cfg.gap(0) - 2.0 * d + cfg.epsilon * d * d;
    }
    if r >= 1.0 {
        return -2.0 * (r - 1.0);
    }
    let mut j = 0usize;
    while j < 1100 && r >= r_seq(j as i64 + 1) {
        j += 1;
    }
    let s = s_seq(j);
    if r <= s {
        return cfg.gap(j);
    }
    let (g0, g1) = (cfg.gap(j), cfg.gap(j + 1));
    g0 - (g0 - g1) * (r - s) / (r_seq(j as i64 + 1) - s)
}

/// `Ξ̃(r)`; inaccurate near `r = 1`, where [`xi_gap`] should be used.
pub fn xi_tilde(r: f64, cfg: &PlanarConfig) -> f64 {
    1.0 - xi_gap(r, cfg)
}

/// Geometry of the modified annulus `s_{2n} ≤ ‖x‖ ≤ s_{2n+1}` in its local
/// frame, where `σ̃_{2n} = (r_{2n}, 0)` and the target is `(0, r_{2n+1})`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Annulus {
    /// Quarter turns from the global frame to the local one.
    quarter: usize,
    inner: f64,
    outer: f64,
    /// `Q`, where the segment from `σ̃_{2n}` to the target leaves `B_{s_{2n}}`.
    q: [f64; 2],
    target: [f64; 2],
    /// `t(P) − r(P) = s_{2n+1} − r_{2n+1}`.
    lift: f64,
}

impl Annulus {
    fn new(n: usize, nbar: usize) -> Self {
        let start = [r_seq(2 * n as i64), 0.0];
        let target = [0.0, r_seq(2 * n as i64 + 1)];
        let inner = s_seq(2 * n);
        let d = [target[0] - start[0], target[1] - start[1]];
        // |start + v d|² = inner², larger root.
        let aa = d[0] * d[0] + d[1] * d[1];
        let bb = 2.0 * (start[0] * d[0] + start[1] * d[1]);
        let cc = start[0] * start[0] + start[1] * start[1] - inner * inner;
        let v = (-bb + (bb * bb - 4.0 * aa * cc).sqrt()) / (2.0 * aa);
        Self {
            quarter: (n - nbar) % 4,
            inner,
            outer: s_seq(2 * n + 1),
            q: [start[0] + v * d[0], start[1] + v * d[1]],
            target,
            lift: s_seq(2 * n + 1) - r_seq(2 * n as i64 + 1),
        }
    }

    fn to_local(&self, x: [f64; 2]) -> [f64; 2] {
        match self.quarter {
            0 => x,
            1 => [x[1], -x[0]],
            2 => [-x[0], -x[1]],
            _ => [-x[1], x[0]],
        }
    }

    fn point(&self, u: f64) -> [f64; 2] {
        [
            self.q[0] + u * (self.target[0] - self.q[0]),
            self.q[1] + u * (self.target[1] - self.q[1]),
        ]
    }

    /// Whether `x` lies on or inside the curve `γ_{P(u)}`.
    fn inside(&self, x: [f64; 2], rho: f64, u: f64) -> bool {
        let p = self.point(u);
        let r = p[0].hypot(p[1]);
        let limit = if x[0] <= p[0] { r } else { r + self.lift };
        rho <= limit
    }

    /// Radius `r(P)` of the curve through `x` (local frame, `x_1 > 0`).
    fn curve_radius(&self, x: [f64; 2], rho: f64) -> f64 {
        if self.inside(x, rho, 0.0) {
            return self.inner;
        }
        if !self.inside(x, rho, 1.0) {
            return self.target[1];
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.inside(x, rho, mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let p = self.point(hi);
        p[0].hypot(p[1])
    }
}

/// The fidelity map `N` (or `Ξ` when radial), evaluated in gap form.
#[derive(Debug, Clone)]
pub struct PlanarField {
    pub cfg: PlanarConfig,
    annuli: Vec<Annulus>,
}

impl PlanarField {
    pub fn new(cfg: PlanarConfig) -> Result<Self, CounterexampleError> {
        cfg.validate()?;
        let annuli = if cfg.radial {
            Vec::new()
        } else {
            (cfg.nbar..cfg.nbar + 26).map(|n| Annulus::new(n, cfg.nbar)).collect()
        };
        Ok(Self { cfg, annuli })
    }

    /// Index `n` of the modified annulus containing radius `rho`, if any.
    pub fn modified_annulus(&self, rho: f64) -> Option<usize> {
        self.annulus(rho).map(|a| self.cfg.nbar + a)
    }

    fn annulus(&self, rho: f64) -> Option<usize> {
        self.annuli.iter().position(|a| rho >= a.inner && rho <= a.outer)
    }

    /// Coordinates of `x` in the local frame of modified annulus `n`.
    pub fn local_frame(&self, n: usize, x: [f64; 2]) -> Option<[f64; 2]> {
        let k = n.checked_sub(self.cfg.nbar)?;
        self.annuli.get(k).map(|a| a.to_local(x))
    }

    /// `1 − N(x)`.
    pub fn gap(&self, x: [f64; 2]) -> f64 {
        let rho = x[0].hypot(x[1]);
        let Some(k) = self.annulus(rho) else {
            return xi_gap(rho, &self.cfg);
        };
        let a = &self.annuli[k];
        let local = a.to_local(x);
        if local[0] <= 0.0 {
            return xi_gap(rho, &self.cfg);
        }
        let y = [local[0], local[1].abs()];
        xi_gap(a.curve_radius(y, rho), &self.cfg)
    }

    /// `N(x)`; use [`PlanarField::gap`] wherever `N` is close to 1.
    pub fn value(&self, x: [f64; 2]) -> f64 {
        1.0 - self.gap(x)
    }
}

/// Search annulus and angular origin for [`planar_argmin`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarRegion {
    pub r_min: f64,
    pub r_max: f64,
    /// Angles are ordered counterclockwise from this direction for the tie-break.
    pub angle0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArgminOptions {
    pub n_angle: usize,
    pub n_radius: usize,
    /// Final step of the local refinement.
    pub tol: f64,
}

impl Default for ArgminOptions {
    fn default() -> Self {
        Self {
            n_angle: 4096,
            n_radius: 4096,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArgminResult {
    pub point: [f64; 2],
    pub radius: f64,
    /// In `[0, 2π)`.
    pub angle: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Relative angle of grid column `k`, symmetric about zero.
fn grid_angle(k: usize, n: usize) -> f64 {
    if 2 * k <= n {
        TAU * k as f64 / n as f64
    } else {
        -TAU * (n - k) as f64 / n as f64
    }
}

fn polar(rho: f64, angle: f64) -> [f64; 2] {
    [rho * angle.cos(), rho * angle.sin()]
}

/// Global minimizer of `f` over a polar grid on the region, refined by
/// compass search.
///
/// Grid values within `1024 ε |f*|` of the grid minimum `f*` are ties. They
/// are broken by the smallest angle counterclockwise from `angle0`, then
/// the smallest radius. Columns are scanned in parallel and reduced in
/// column order, so the result does not depend on the thread count.
pub fn planar_argmin<F>(f: F, region: PolarRegion, opts: ArgminOptions) -> ArgminResult
where
    F: Fn([f64; 2]) -> f64 + Sync,
{
    let (na, nr) = (opts.n_angle.max(4), opts.n_radius.max(2));
    let dr = (region.r_max - region.r_min) / (nr - 1) as f64;
    let radius = |j: usize| region.r_min + dr * j as f64;
    let column = |k: usize| {
        let angle = region.angle0 + grid_angle(k, na);
        (0..nr)
            .map(|j| f(polar(radius(j), angle)))
            .fold(f64::INFINITY, f64::min)
    };
    let mins: Vec<f64> = (0..na).into_par_iter().map(column).collect();
    let best = mins.iter().copied().fold(f64::INFINITY, f64::min);
    let tie = 1024.0 * f64::EPSILON * best.abs();
    // Counterclockwise order from angle0: k = 0, 1, …, na − 1.
    let k = mins.iter().position(|v| *v <= best + tie).unwrap_or(0);
    let angle = region.angle0 + grid_angle(k, na);
    let j = (0..nr)
        .position(|j| f(polar(radius(j), angle)) <= best + tie)
        .unwrap_or(0);
    let mut evaluations = na * nr + j + 1;

    let (mut rho, mut psi) = (radius(j), grid_angle(k, na));
    let mut value = f(polar(rho, region.angle0 + psi));
    let (mut h_r, mut h_a) = (dr.max(opts.tol), TAU / na as f64);
    let dirs: [(f64, f64); 8] = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (1.0, 1.0),
        (1.0, -1.0),
        (-1.0, 1.0),
        (-1.0, -1.0),
    ];
    while h_r > opts.tol || h_a * rho.max(1.0) > opts.tol {
        let accept = 4.0 * f64::EPSILON * value.abs();
        let mut moved = false;
        for (sr, sa) in dirs {
            let cand_r = (rho + sr * h_r).max(0.0);
            let cand_a = psi + sa * h_a;
            let v = f(polar(cand_r, region.angle0 + cand_a));
            evaluations += 1;
            if v < value - accept {
                rho = cand_r;
                psi = cand_a;
                value = v;
                moved = true;
                break;
            }
        }
        if !moved {
            h_r *= 0.5;
            h_a *= 0.5;
        }
    }
    let angle = (region.angle0 + psi).rem_euclid(TAU);
    ArgminResult {
        point: polar(rho, region.angle0 + psi),
        radius: rho,
        angle,
        value,
        evaluations,
    }
}

/// The iteration's problem: `X = R²`, `N̂ = 1`, `d = |1 − N|`, `|x| = ‖x‖`.
#[derive(Debug, Clone)]
pub struct PlanarProblem {
    pub field: PlanarField,
}

impl MultiscaleProblem for PlanarProblem {
    type Element = [f64; 2];

    fn zero(&self) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn add(&self, x: &[f64; 2], y: &[f64; 2]) -> [f64; 2] {
        [x[0] + y[0], x[1] + y[1]]
    }

    fn negate(&self, x: &[f64; 2]) -> [f64; 2] {
        [-x[0], -x[1]]
    }

    fn norm(&self, x: &[f64; 2]) -> f64 {
        x[0].hypot(x[1])
    }

    fn regularizer(&self, x: &[f64; 2]) -> f64 {
        x[0].hypot(x[1])
    }

    fn is_admissible(&self, x: &[f64; 2]) -> bool {
        x[0].is_finite() && x[1].is_finite()
    }

    fn fidelity(&self, x: &[f64; 2]) -> f64 {
        self.field.gap(*x).abs()
    }
}

/// Exact inner solver: [`planar_argmin`] on the band `r_{n-1} ≤ ‖x‖ ≤ s_n`
/// (widened by an eighth of `r_n − r_{n-1}`) that contains every minimizer.
#[derive(Debug, Clone, Copy, Default)]
pub struct PlanarArgminSolver {
    pub opts: ArgminOptions,
}

impl PlanarArgminSolver {
    pub fn region(n: usize, base: [f64; 2]) -> PolarRegion {
        let lo = r_seq(n as i64 - 1);
        let hi = s_seq(n);
        let margin = (r_seq(n as i64) - lo) / 8.0;
        let angle0 = if base == [0.0, 0.0] { 0.0 } else { base[1].atan2(base[0]) };
        PolarRegion {
            r_min: (lo - margin).max(0.0),
            r_max: hi + margin,
            angle0,
        }
    }
}

impl InnerSolver<PlanarProblem> for PlanarArgminSolver {
    fn solve(
        &mut self,
        problem: &PlanarProblem,
        step: &ScaleStep<'_, [f64; 2]>,
    ) -> Result<InnerSolution<[f64; 2]>, SolverFailure> {
        if step.alpha != 1.0 || step.beta != 1.0 || step.gamma != 1.0 {
            return Err(SolverFailure::new("the planar solver needs α = β = γ = 1"));
        }
        let n = step.index;
        let gap = problem.field.cfg.gap(n);
        if gap < PRECISION_FLOOR {
            return Err(SolverFailure::precision(format!(
                "1 - h_{n} = {gap:e} is below {PRECISION_FLOOR:e}; last trustworthy scale is {}",
                n as i64 - 1
            )));
        }
        let base = *step.base;
        let (lambda, a) = (step.lambda, step.a);
        let objective = |x: [f64; 2]| {
            lambda * (problem.field.gap(x).abs() + a * x[0].hypot(x[1]))
                + (x[0] - base[0]).hypot(x[1] - base[1])
        };
        let res = planar_argmin(objective, Self::region(n, base), self.opts);
        Ok(InnerSolution {
            increment: [res.point[0] - base[0], res.point[1] - base[1]],
            iterations: res.evaluations,
            converged: true,
            residual: 0.0,
        })
    }
}

/// One iterate `σ̃_n = radius (cos θ, sin θ)` with its predicted position.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanarRow {
    pub n: usize,
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    /// In `[0, 2π)`.
    pub theta: f64,
    /// `θ / (π/2)` rounded to the nearest quarter turn, modulo 4.
    pub quarter_turns: usize,
    pub expected_radius: f64,
    pub expected_quarter_turns: usize,
    pub radius_error: f64,
    pub fidelity: f64,
    pub augmented: f64,
    /// `r_{n-1} ≤ ‖σ̃_n‖ < s_n`.
    pub in_band: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanarTrajectory {
    pub config: PlanarConfig,
    pub rows: Vec<PlanarRow>,
    /// Set when the run stopped at the precision floor.
    pub precision_abort: Option<PrecisionAbort>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrecisionAbort {
    pub scale: usize,
    pub last_trustworthy: Option<usize>,
    pub message: String,
}

/// Predicted quarter turns of `σ̃_n`.
pub fn expected_quarter_turns(n: usize, cfg: &PlanarConfig) -> usize {
    if cfg.radial || n <= 2 * cfg.nbar {
        0
    } else {
        // n = 2 n̄ + 2m − 1 or 2 n̄ + 2m.
        (n - 2 * cfg.nbar + 1) / 2 % 4
    }
}

impl PlanarTrajectory {
    /// All radii within `tol` of `r_n` and all quarter-turn labels as predicted.
    pub fn matches_prediction(&self, tol: f64) -> bool {
        self.rows
            .iter()
            .all(|r| r.radius_error <= tol && r.quarter_turns == r.expected_quarter_turns)
    }

    /// Angles between consecutive even iterates beyond `2 n̄`.
    pub fn even_angle_steps(&self) -> Vec<f64> {
        let evens: Vec<&PlanarRow> = self
            .rows
            .iter()
            .filter(|r| r.n % 2 == 0 && r.n >= 2 * self.config.nbar)
            .collect();
        evens
            .windows(2)
            .map(|w| {
                let d = (w[1].theta - w[0].theta).rem_euclid(TAU);
                d.min(TAU - d)
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "n,x,y,radius,theta,quarter_turns,expected_radius,expected_quarter_turns,radius_error,fidelity,augmented,in_band\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:?},{:?},{:?},{:?},{},{:?},{},{:e},{:e},{:e},{}\n",
                r.n,
                r.x,
                r.y,
                r.radius,
                r.theta,
                r.quarter_turns,
                r.expected_radius,
                r.expected_quarter_turns,
                r.radius_error,
                r.fidelity,
                r.augmented,
                r.in_band
            ));
        }
        out
    }
}

/// Runs the tight iteration with the exact polar-grid inner solver.
pub fn run_planar_counterexample(
    cfg: PlanarConfig,
    opts: ArgminOptions,
) -> Result<PlanarTrajectory, CounterexampleError> {
    let problem = PlanarProblem {
        field: PlanarField::new(cfg)?,
    };
    let mut solver = PlanarArgminSolver { opts };
    let (trace, abort) = match run_multiscale(&problem, &cfg.schedule(), &mut solver, RunOptions::new(opts.tol)) {
        Ok(t) => (t, None),
        Err(e) if e.error.is_precision() => {
            let scale = e.error.scale().unwrap_or(0);
            let abort = PrecisionAbort {
                scale,
                last_trustworthy: scale.checked_sub(1),
                message: e.error.to_string(),
            };
            (*e.partial, Some(abort))
        }
        Err(e) => return Err(CounterexampleError::Solver(e.error.to_string())),
    };
    let rows = trace
        .partial_sums
        .iter()
        .enumerate()
        .map(|(n, p)| {
            let radius = p[0].hypot(p[1]);
            let theta = p[1].atan2(p[0]).rem_euclid(TAU);
            let quarter_turns = ((theta / FRAC_PI_2).round() as usize) % 4;
            let expected = r_seq(n as i64);
            PlanarRow {
                n,
                x: p[0],
                y: p[1],
                radius,
                theta,
                quarter_turns,
                expected_radius: expected,
                expected_quarter_turns: expected_quarter_turns(n, &cfg),
                radius_error: (radius - expected).abs(),
                fidelity: trace.fidelity[n],
                augmented: trace.augmented[n],
                in_band: radius >= r_seq(n as i64 - 1) && radius < s_seq(n),
            }
        })
        .collect();
    Ok(PlanarTrajectory {
        config: cfg,
        rows,
        precision_abort: abort,
    })
}

/// Angle label `mπ/2` as text.
pub fn quarter_label(q: usize) -> &'static str {
    ["0", "pi/2", "pi", "3pi/2"][q % 4]
}
