//! The single-step `ℓ₂` examples, truncated to `D` coordinates.
//!
//! `X = E = ℓ₂` with `‖a‖² = Σ a_n²` and the stronger norm `|a|² = Σ (n a_n)²`,
//! data `N̂ = 0`, exponents `α = β = 2`, and `b_n = 1/n`, so `‖b‖` stays bounded
//! while the truncated `|b| = √D` grows with `D`. On
//! `A_1 = {‖a − b‖ ≤ ‖b‖/2}` both versions set `N(a) = 1/f(‖a − b‖)` with
//! `f(r) = min{|a| : ‖a − b‖ = r}`. Outside `A_1`:
//!
//! - version 1 makes `N` small on the shell `A_2 = {r_0/2 ≤ ‖a‖ ≤ 3r_0/2}`,
//!   so minimizers stay bounded but drift to ever higher coordinates;
//! - version 2 sets `N(a) = g(‖a‖)` with a Gaussian tail, so minimizers run
//!   off to infinity along the first coordinate.

use multiscale_core::{
    single_step_regularized, InnerSolution, InnerSolver, MultiscaleProblem, ScaleStep,
    SolverFailure,
};
use serde::{Deserialize, Serialize};

use crate::error::CounterexampleError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum L2Version {
    V1,
    V2,
}

impl std::str::FromStr for L2Version {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "v1" => Ok(L2Version::V1),
            "2" | "v2" => Ok(L2Version::V2),
            other => Err(format!("unknown version `{other}` (expected 1 or 2)")),
        }
    }
}

impl std::fmt::Display for L2Version {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            L2Version::V1 => "1",
            L2Version::V2 => "2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L2Config {
    pub dim: usize,
    pub version: L2Version,
    /// Radius of the shell `A_2` in version 1.
    pub r0: f64,
}

impl Default for L2Config {
    fn default() -> Self {
        Self {
            dim: 64,
            version: L2Version::V2,
            r0: 0.25,
        }
    }
}

/// `‖a‖`
pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `|a| = (Σ (n a_n)²)^{1/2}`, coordinates numbered from 1.
pub fn weighted_norm(a: &[f64]) -> f64 {
    a.iter()
        .enumerate()
        .map(|(i, v)| ((i + 1) as f64 * v).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `Ñ(a) = Σ |a_n| / n²`
pub fn tilde_n(a: &[f64]) -> f64 {
    a.iter()
        .enumerate()
        .map(|(i, v)| v.abs() / ((i + 1) as f64).powi(2))
        .sum()
}

/// Value of `f(r)` and its minimizer `a_n = b_n μ/(μ + n²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FValue {
    pub value: f64,
    pub mu: f64,
    pub minimizer: Vec<f64>,
    /// `r ≥ ‖b‖`, where `a = 0` is feasible and the minimum is 0.
    pub clipped: bool,
}

/// `f(r) = min{|a| : ‖a − b‖ = r}` by monotone root-finding on the multiplier.
pub fn l2ex_f(r: f64, b: &[f64]) -> Result<FValue, CounterexampleError> {
    if !(r.is_finite() && r > 0.0) {
        return Err(CounterexampleError::Radius { r });
    }
    if r >= norm(b) {
        return Ok(FValue {
            value: 0.0,
            mu: 0.0,
            minimizer: vec![0.0; b.len()],
            clipped: r > norm(b),
        });
    }
    // ‖a(μ) − b‖ decreases from ‖b‖ to 0 as μ runs over (0, ∞).
    let dist = |mu: f64| -> f64 {
        b.iter()
            .enumerate()
            .map(|(i, bn)| {
                let n2 = ((i + 1) as f64).powi(2);
                (n2 * bn / (mu + n2)).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    };
    let (mut lo, mut hi) = (-60.0f64, 0.0f64);
    while dist(hi.exp()) > r {
        lo = hi;
        hi += 8.0;
    }
    while dist(lo.exp()) < r {
        lo -= 8.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if dist(mid.exp()) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = (0.5 * (lo + hi)).exp();
    let minimizer: Vec<f64> = b
        .iter()
        .enumerate()
        .map(|(i, bn)| bn * mu / (mu + ((i + 1) as f64).powi(2)))
        .collect();
    Ok(FValue {
        value: weighted_norm(&minimizer),
        mu,
        minimizer,
        clipped: false,
    })
}

/// Inverse of the decreasing function `f` on `(0, ‖b‖]`: the `r` with `f(r) = y`.
fn f_inverse(y: f64, b: &[f64]) -> Result<f64, CounterexampleError> {
    let (mut lo, mut hi) = (0.0f64, norm(b));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if l2ex_f(mid, b)?.value > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn golden<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - phi * (hi - lo);
    let mut c = lo + phi * (hi - lo);
    let (mut fa, mut fc) = (f(a), f(c));
    for _ in 0..iters {
        if fa <= fc {
            hi = c;
            c = a;
            fc = fa;
            a = hi - phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = c;
            fa = fc;
            c = lo + phi * (hi - lo);
            fc = f(c);
        }
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Which piece of `N` the minimizer lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `A_1`, near `b`.
    Near,
    /// Version 1 shell `A_2`.
    Shell,
    /// Version 2 Gaussian tail `‖a‖ > 2‖b‖`.
    Tail,
    /// The origin, where `N = 1/f(‖b‖/2)` in version 2.
    Origin,
    /// Only a lower bound is known on this piece.
    Unresolved,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::Near => "near",
            Branch::Shell => "shell",
            Branch::Tail => "tail",
            Branch::Origin => "origin",
            Branch::Unresolved => "unresolved",
        })
    }
}

/// A truncated example with its derived constants.
#[derive(Debug, Clone)]
pub struct L2Example {
    pub cfg: L2Config,
    pub b: Vec<f64>,
    pub b_norm: f64,
    /// `C = f(‖b‖/2)²`
    pub c: f64,
    /// Version 1: slope of `N` across the shell, `4/(r_0 √C)`.
    /// Version 2: `C₁ = e^{(2‖b‖)²} / f(‖b‖/2)`.
    pub c1: f64,
    /// Version 1 extension slope away from `A_1`.
    lipschitz: f64,
}

/// Minimizer of `N(a)² + |a|²/λ` restricted to one piece.
#[derive(Debug, Clone, PartialEq)]
struct Candidate {
    branch: Branch,
    value: f64,
    point: Vec<f64>,
}

impl L2Example {
    pub fn new(cfg: L2Config) -> Result<Self, CounterexampleError> {
        if cfg.dim < 8 {
            return Err(CounterexampleError::Config {
                field: "dim",
                value: cfg.dim as f64,
                reason: "must be at least 8",
            });
        }
        let b: Vec<f64> = (1..=cfg.dim).map(|n| 1.0 / n as f64).collect();
        let b_norm = norm(&b);
        if cfg.version == L2Version::V1 && !(cfg.r0 > 0.0 && cfg.r0 <= b_norm / 4.0 && cfg.r0 < 0.5) {
            return Err(CounterexampleError::Config {
                field: "r0",
                value: cfg.r0,
                reason: "needs 0 < r0 <= min(1/2, |b|/4)",
            });
        }
        let f_half = l2ex_f(b_norm / 2.0, &b)?.value;
        let c = f_half * f_half;
        let c1 = match cfg.version {
            L2Version::V1 => 4.0 / (cfg.r0 * c.sqrt()),
            L2Version::V2 => (4.0 * b_norm * b_norm).exp() / f_half,
        };
        // Bound of Ñ on the unit sphere is (Σ n^{-4})^{1/2} < 1.05.
        let lipschitz = 8.0 * (1.05 * cfg.r0 + c1 * cfg.r0 / 2.0) / b_norm;
        Ok(Self {
            cfg,
            b,
            b_norm,
            c,
            c1,
            lipschitz,
        })
    }

    /// `g(r)` of version 2.
    pub fn g(&self, r: f64) -> f64 {
        if r <= 2.0 * self.b_norm {
            1.0 / self.c.sqrt()
        } else {
            self.c1 * (-r * r).exp()
        }
    }

    /// `√((1/2) log(2 C₁² λ))`
    pub fn closed_form_radius(&self, lambda: f64) -> f64 {
        (0.5 * (2.0 * self.c1 * self.c1 * lambda).ln()).sqrt()
    }

    pub fn in_near(&self, a: &[f64]) -> bool {
        let d: Vec<f64> = a.iter().zip(&self.b).map(|(x, y)| x - y).collect();
        norm(&d) <= self.b_norm / 2.0
    }

    /// Version 1 shell formula, scaled down to 0 inside `‖a‖ < r_0/2`.
    fn shell_formula(&self, a: &[f64]) -> f64 {
        let rho = norm(a);
        let r0 = self.cfg.r0;
        let dir = if rho > 0.0 {
            let u: Vec<f64> = a.iter().map(|v| v / rho).collect();
            (2.0 * rho / r0).min(1.0) * r0 * tilde_n(&u)
        } else {
            0.0
        };
        dir + self.c1 * (rho - r0).abs()
    }

    /// The forward map `N(a) ≥ 0`.
    pub fn n_value(&self, a: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(&self.b).map(|(x, y)| x - y).collect();
        let dist = norm(&d);
        if dist <= self.b_norm / 2.0 {
            if dist == 0.0 {
                return 0.0;
            }
            return l2ex_f(dist, &self.b).map(|f| 1.0 / f.value).unwrap_or(f64::INFINITY);
        }
        let rho = norm(a);
        match self.cfg.version {
            L2Version::V2 => self.g(rho),
            L2Version::V1 => {
                let r0 = self.cfg.r0;
                let f = self.shell_formula(a);
                if rho >= r0 / 2.0 && rho <= 1.5 * r0 {
                    f
                } else {
                    let floor = 1.0 / self.c.sqrt();
                    let ramp = floor + self.lipschitz * (dist - self.b_norm / 2.0);
                    f.min(ramp).max(floor)
                }
            }
        }
    }

    /// `N(a)² + |a|²/λ`
    pub fn scaled_objective(&self, a: &[f64], lambda: f64) -> f64 {
        self.n_value(a).powi(2) + weighted_norm(a).powi(2) / lambda
    }

    /// On `A_1` the problem reduces to `min{1/x + x/λ : x ≥ C}`.
    fn near_candidate(&self, lambda: f64) -> Result<Candidate, CounterexampleError> {
        let x = lambda.sqrt().max(self.c);
        let r = f_inverse(x.sqrt(), &self.b)?;
        let f = l2ex_f(r, &self.b)?;
        Ok(Candidate {
            branch: Branch::Near,
            value: 1.0 / x + x / lambda,
            point: f.minimizer,
        })
    }

    /// Version 2 tail: numerical minimum of `g(r)² + r²/λ` over `r > 2‖b‖`,
    /// attained at `r e_1`.
    fn tail_candidate(&self, lambda: f64) -> Option<Candidate> {
        let phi = |r: f64| self.g(r).powi(2) + r * r / lambda;
        let start = 2.0 * self.b_norm;
        let mut step = 1e-3;
        let eps = start * 1e-9;
        if phi(start + eps) >= 1.0 / self.c {
            // Not below the plateau just past the switch: no interior minimum there.
            let mut r = start + eps;
            let mut best = (r, phi(r));
            while r < start + 64.0 {
                r += 1e-2;
                let v = phi(r);
                if v < best.1 {
                    best = (r, v);
                }
            }
            if best.1 >= 1.0 / self.c {
                return None;
            }
        }
        // φ decreases then increases on (2‖b‖, ∞); bracket the turn by doubling.
        let (mut a, mut m) = (start + eps, start + eps + step);
        while phi(m) > phi(a) && step > 1e-12 {
            step *= 0.5;
            m = a + step;
        }
        if phi(m) > phi(a) {
            return None;
        }
        let mut c = m + step;
        while phi(c) < phi(m) {
            a = m;
            m = c;
            step *= 2.0;
            c = m + step;
        }
        let r = golden(phi, a, c, 400);
        if r <= start {
            return None;
        }
        let mut point = vec![0.0; self.cfg.dim];
        point[0] = r;
        Some(Candidate {
            branch: Branch::Tail,
            value: phi(r),
            point,
        })
    }

    /// Version 1 shell: the minimizing direction has at most two nonzero
    /// coordinates, so singletons and pairs are enumerated with the radius
    /// solved in closed form.
    fn shell_candidate(&self, lambda: f64) -> Candidate {
        let r0 = self.cfg.r0;
        let c1 = self.c1;
        // min over ρ ∈ [r0/2, r0] of (A + c1 (r0 − ρ))² + B ρ².
        let best_rho = |a: f64, bq: f64| -> (f64, f64) {
            let rho = (c1 * (a + c1 * r0) / (c1 * c1 + bq)).clamp(r0 / 2.0, r0);
            let v = (a + c1 * (r0 - rho)).powi(2) + bq * rho * rho;
            (rho, v)
        };
        let pair = |n: usize, m: usize, phi: f64| -> (f64, f64) {
            let (c, s) = (phi.cos(), phi.sin());
            let (nf, mf) = (n as f64, m as f64);
            let a = r0 * (c / (nf * nf) + s / (mf * mf));
            let bq = (nf * nf * c * c + mf * mf * s * s) / lambda;
            best_rho(a, bq)
        };
        let d = self.cfg.dim;
        let mut best = (f64::INFINITY, 1usize, 1usize, 0.0f64, 0.0f64);
        for n in 1..=d {
            let (rho, v) = pair(n, n, 0.0);
            if v < best.0 {
                best = (v, n, n, 0.0, rho);
            }
        }
        let scan = 128;
        for n in 1..=d {
            for m in n + 1..=d {
                let mut arg = (f64::INFINITY, 0usize);
                for k in 1..scan {
                    let phi = std::f64::consts::FRAC_PI_2 * k as f64 / scan as f64;
                    let v = pair(n, m, phi).1;
                    if v < arg.0 {
                        arg = (v, k);
                    }
                }
                let h = std::f64::consts::FRAC_PI_2 / scan as f64;
                let phi = golden(|p| pair(n, m, p).1, (arg.1 as f64 - 1.0) * h, (arg.1 as f64 + 1.0) * h, 200);
                let (rho, v) = pair(n, m, phi);
                if v < best.0 {
                    best = (v, n, m, phi, rho);
                }
            }
        }
        let (value, n, m, phi, rho) = best;
        let mut point = vec![0.0; d];
        if n == m {
            point[n - 1] = rho;
        } else {
            point[n - 1] = rho * phi.cos();
            point[m - 1] = rho * phi.sin();
        }
        Candidate {
            branch: Branch::Shell,
            value,
            point,
        }
    }

    /// Global minimizer of `N(a)² + |a|²/λ`, piece by piece.
    fn global(&self, lambda: f64) -> Result<Candidate, CounterexampleError> {
        let mut cands = vec![self.near_candidate(lambda)?];
        let plateau = 1.0 / self.c;
        match self.cfg.version {
            L2Version::V2 => {
                cands.push(Candidate {
                    branch: Branch::Origin,
                    value: plateau,
                    point: vec![0.0; self.cfg.dim],
                });
                cands.extend(self.tail_candidate(lambda));
            }
            L2Version::V1 => {
                cands.push(self.shell_candidate(lambda));
                // Elsewhere N² ≥ 1/C; only the bound is known.
                cands.push(Candidate {
                    branch: Branch::Unresolved,
                    value: plateau,
                    point: vec![0.0; self.cfg.dim],
                });
            }
        }
        let mut best = cands.swap_remove(0);
        for c in cands {
            if c.value < best.value {
                best = c;
            }
        }
        Ok(best)
    }

    /// Smallest `λ` on a scan above which the version 2 minimizer is on the
    /// tail, refined by bisection.
    pub fn tail_threshold(&self) -> Result<f64, CounterexampleError> {
        let is_tail = |l: f64| self.global(l).map(|c| c.branch == Branch::Tail);
        let grid: Vec<f64> = (0..=1000).map(|k| 10f64.powf(-2.0 + k as f64 / 100.0)).collect();
        let mut last_non_tail = None;
        for (i, &l) in grid.iter().enumerate() {
            if !is_tail(l)? {
                last_non_tail = Some(i);
            }
        }
        let i = match last_non_tail {
            None => return Ok(grid[0]),
            Some(i) if i + 1 == grid.len() => {
                return Err(CounterexampleError::Solver("no tail regime below 1e8".into()))
            }
            Some(i) => i,
        };
        let (mut lo, mut hi) = (grid[i], grid[i + 1]);
        for _ in 0..100 {
            let mid = (lo * hi).sqrt();
            if mid <= lo || mid >= hi {
                break;
            }
            if is_tail(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

impl MultiscaleProblem for L2Example {
    type Element = Vec<f64>;

    fn zero(&self) -> Vec<f64> {
        vec![0.0; self.cfg.dim]
    }

    fn add(&self, x: &Vec<f64>, y: &Vec<f64>) -> Vec<f64> {
        x.iter().zip(y).map(|(a, b)| a + b).collect()
    }

    fn negate(&self, x: &Vec<f64>) -> Vec<f64> {
        x.iter().map(|a| -a).collect()
    }

    fn norm(&self, x: &Vec<f64>) -> f64 {
        norm(x)
    }

    fn regularizer(&self, x: &Vec<f64>) -> f64 {
        weighted_norm(x)
    }

    fn is_admissible(&self, x: &Vec<f64>) -> bool {
        x.len() == self.cfg.dim && x.iter().all(|v| v.is_finite())
    }

    fn fidelity(&self, x: &Vec<f64>) -> f64 {
        self.n_value(x)
    }
}

/// Inner solver returning the piecewise global minimizer.
#[derive(Debug, Clone, Copy, Default)]
pub struct StructuredL2Solver;

impl InnerSolver<L2Example> for StructuredL2Solver {
    fn solve(
        &mut self,
        problem: &L2Example,
        step: &ScaleStep<'_, Vec<f64>>,
    ) -> Result<InnerSolution<Vec<f64>>, SolverFailure> {
        if step.base.iter().any(|v| *v != 0.0) || step.alpha != 2.0 || step.beta != 2.0 || step.a != 0.0 {
            return Err(SolverFailure::new("only the single step with α = β = 2 is supported"));
        }
        let c = problem.global(step.lambda).map_err(|e| SolverFailure::new(e.to_string()))?;
        Ok(InnerSolution::exact(c.point))
    }
}

/// Diagnostics of `σ_λ` for one `λ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L2Row {
    pub lambda: f64,
    pub branch: Branch,
    pub first_coordinate: f64,
    /// `√((1/2) log(2C₁²λ))`, version 2 only.
    pub closed_form: Option<f64>,
    pub norm: f64,
    pub weighted_norm: f64,
    /// 1-based coordinate of largest magnitude.
    pub active_index: usize,
    /// `N(σ)² + |σ|²/λ`
    pub objective: f64,
    pub safeguard_used: bool,
    /// The active coordinate touches the truncation.
    pub untrusted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L2Report {
    pub config: L2Config,
    pub b_norm: f64,
    pub c: f64,
    pub c1: f64,
    pub rows: Vec<L2Row>,
}

impl L2Report {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "lambda,branch,first_coordinate,closed_form,abs_error,norm,weighted_norm,active_index,objective,safeguard_used,untrusted\n",
        );
        for r in &self.rows {
            let (cf, err) = match r.closed_form {
                Some(v) => (format!("{v:?}"), format!("{:e}", (r.first_coordinate - v).abs())),
                None => (String::new(), String::new()),
            };
            out.push_str(&format!(
                "{:?},{},{:?},{},{},{:?},{:?},{},{:e},{},{}\n",
                r.lambda,
                r.branch,
                r.first_coordinate,
                cf,
                err,
                r.norm,
                r.weighted_norm,
                r.active_index,
                r.objective,
                r.safeguard_used,
                r.untrusted
            ));
        }
        out
    }
}

/// Solves the single-step problem for each `λ` through the core driver.
pub fn run_l2_example(cfg: L2Config, lambdas: &[f64]) -> Result<L2Report, CounterexampleError> {
    if lambdas.is_empty()
        || lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0))
        || lambdas.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(CounterexampleError::Lambdas(format!("{lambdas:?}")));
    }
    let ex = L2Example::new(cfg)?;
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let step = single_step_regularized(&ex, lambda, 2.0, 2.0, &mut StructuredL2Solver, 1e-12)
            .map_err(|e| CounterexampleError::Solver(e.to_string()))?;
        let sigma = step.sigma;
        let branch = ex.global(lambda)?.branch;
        let active_index = sigma
            .iter()
            .enumerate()
            .fold((0usize, -1.0f64), |best, (i, v)| if v.abs() > best.1 { (i, v.abs()) } else { best })
            .0
            + 1;
        rows.push(L2Row {
            lambda,
            branch: if step.safeguard_used { Branch::Origin } else { branch },
            first_coordinate: sigma[0],
            closed_form: (cfg.version == L2Version::V2).then(|| ex.closed_form_radius(lambda)),
            norm: norm(&sigma),
            weighted_norm: weighted_norm(&sigma),
            active_index,
            objective: ex.scaled_objective(&sigma, lambda),
            safeguard_used: step.safeguard_used,
            untrusted: active_index + 1 >= cfg.dim,
        });
    }
    Ok(L2Report {
        config: cfg,
        b_norm: ex.b_norm,
        c: ex.c,
        c1: ex.c1,
        rows,
    })
}

/// `count` values from `lo` to `hi`, evenly spaced in `log10`.
pub fn log_ladder(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|k| 10f64.powf(a + (b - a) * k as f64 / (count - 1) as f64))
        .collect()
}
