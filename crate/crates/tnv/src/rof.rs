//! Exact discrete ROF solver.
//!
//! The user-facing problem is `min_u λ‖f − u‖² + J(u)` with `h`-weighted
//! norms. Dividing by `2λh²` gives
//!
//! ```text
//! ½ Σ (u − f)² + μ Σ |Δu| + κ Σ |u|,    μ = 1/(2λh),  κ = 1/(2λ)
//! ```
//!
//! (`κ = 0` for the seminorm), whose dual is
//!
//! ```text
//! min_{|p_i| ≤ 1, |q_i| ≤ 1}  ½ ‖f + μ div p − κ q‖²
//! ```
//!
//! with primal recovery `u = f + μ div p − κ q`. The dual is solved by
//! accelerated projected gradient with adaptive restart, and stopped on the
//! primal–dual gap `μ (Σ|Δu| − ⟨Δu, p⟩) + κ (Σ|u| − ⟨u, q⟩)` divided by
//! `½‖f‖²`, the value of the scaled objective at `u = 0`.

use rayon::prelude::*;

use crate::grid::ImageGrid;
use crate::tv::{divergence, forward_differences, TvKind, TvRegularizer};

/// Dual field of an ROF solve: `p` on the gradient, `q` on the `L¹` term.
#[derive(Debug, Clone, PartialEq)]
pub struct DualField {
    pub px: Vec<f64>,
    pub py: Vec<f64>,
    pub q: Vec<f64>,
}

impl DualField {
    pub fn zeros(n: usize) -> Self {
        Self {
            px: vec![0.0; n],
            py: vec![0.0; n],
            q: vec![0.0; n],
        }
    }

    /// `max_i max(|p_i|, |q_i|)`
    pub fn sup_norm(&self) -> f64 {
        let p = self
            .px
            .iter()
            .zip(&self.py)
            .map(|(a, b)| (a * a + b * b).sqrt())
            .fold(0.0, f64::max);
        self.q.iter().fold(p, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RofSolution {
    pub u: ImageGrid,
    /// `f − u`
    pub v: ImageGrid,
    pub dual: DualField,
    pub iterations: usize,
    /// Primal–dual gap relative to the objective at `u = 0`.
    pub primal_dual_gap: f64,
    pub converged: bool,
    /// `λ‖f − u‖² + J(u)`
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RofOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Iterations between gap evaluations.
    pub check_every: usize,
}

impl RofOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self {
            tol,
            max_iter,
            check_every: 10,
        }
    }
}

/// Images with at least this many pixels use parallel stencil updates.
const PARALLEL_PIXELS: usize = 1 << 14;

struct Dims {
    w: usize,
    h: usize,
    mu: f64,
    kappa: f64,
    full: bool,
}

/// `u = f + μ div p − κ q`
fn primal_from_dual(f: &[f64], d: &DualField, dims: &Dims, div: &mut [f64], u: &mut [f64]) {
    divergence(&d.px, &d.py, dims.w, dims.h, div);
    let (mu, kappa) = (dims.mu, dims.kappa);
    let kernel = |(i, ui): (usize, &mut f64)| {
        let q = if dims.full { kappa * d.q[i] } else { 0.0 };
        *ui = f[i] + mu * div[i] - q;
    };
    if u.len() >= PARALLEL_PIXELS {
        u.par_iter_mut().enumerate().for_each(kernel);
    } else {
        u.iter_mut().enumerate().for_each(kernel);
    }
}

/// Unnormalized gap `μ (Σ|Δu| − ⟨Δu, p⟩) + κ (Σ|u| − ⟨u, q⟩)`.
fn raw_gap(u: &[f64], d: &DualField, dims: &Dims, dx: &mut [f64], dy: &mut [f64]) -> f64 {
    forward_differences(u, dims.w, dims.h, dx, dy);
    let mut tv_part = 0.0;
    for i in 0..u.len() {
        let norm = (dx[i] * dx[i] + dy[i] * dy[i]).sqrt();
        tv_part += norm - (dx[i] * d.px[i] + dy[i] * d.py[i]);
    }
    let mut l1_part = 0.0;
    if dims.full {
        for i in 0..u.len() {
            l1_part += u[i].abs() - u[i] * d.q[i];
        }
    }
    (dims.mu * tv_part + dims.kappa * l1_part).max(0.0)
}

fn project_unit(px: &mut f64, py: &mut f64) {
    let n = (*px * *px + *py * *py).sqrt();
    if n > 1.0 {
        *px /= n;
        *py /= n;
    }
}

/// Solves `min_u λ‖f − u‖² + J(u)` to relative gap `tol`.
pub fn rof_solve(
    f: &ImageGrid,
    lambda: f64,
    reg: TvRegularizer,
    tol: f64,
    max_iter: usize,
) -> RofSolution {
    rof_solve_with(f, lambda, reg, RofOptions::new(tol, max_iter), None)
}

/// As [`rof_solve`], optionally warm-started from a dual field.
pub fn rof_solve_with(
    f: &ImageGrid,
    lambda: f64,
    reg: TvRegularizer,
    opts: RofOptions,
    warm: Option<&DualField>,
) -> RofSolution {
    assert!(lambda > 0.0 && lambda.is_finite(), "lambda must be positive");
    let n = f.len();
    let dims = Dims {
        w: f.width,
        h: f.height,
        mu: 1.0 / (2.0 * lambda * f.h),
        kappa: 1.0 / (2.0 * lambda),
        full: reg.kind == TvKind::FullNorm,
    };
    let f_sq: f64 = f.data.iter().map(|v| v * v).sum();
    let mut p = warm.cloned().unwrap_or_else(|| DualField::zeros(n));
    let mut div = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut dx = vec![0.0; n];
    let mut dy = vec![0.0; n];

    let finish = |u: Vec<f64>, p: DualField, iterations: usize, gap: f64, converged: bool| {
        let u = ImageGrid {
            data: u,
            ..f.clone()
        };
        let v = f.sub(&u);
        let objective = lambda * v.l2_norm_sq() + reg.value(&u);
        RofSolution {
            u,
            v,
            dual: p,
            iterations,
            primal_dual_gap: gap,
            converged,
            objective,
        }
    };

    if f_sq == 0.0 {
        return finish(vec![0.0; n], p, 0, 0.0, true);
    }
    let norm0 = 0.5 * f_sq;

    primal_from_dual(&f.data, &p, &dims, &mut div, &mut u);
    let gap = raw_gap(&u, &p, &dims, &mut dx, &mut dy) / norm0;
    if gap <= opts.tol {
        return finish(u, p, 0, gap, true);
    }

    // Lipschitz constant of the dual gradient: ‖μ div‖² + κ² ≤ 8μ² + κ².
    let lip = 8.0 * dims.mu * dims.mu + if dims.full { dims.kappa * dims.kappa } else { 0.0 };
    let tau = 1.0 / lip;
    let mut prev = p.clone();
    let mut y = p.clone();
    let mut t = 1.0f64;
    let mut gap = gap;
    let check = opts.check_every.max(1);

    for k in 1..=opts.max_iter {
        primal_from_dual(&f.data, &y, &dims, &mut div, &mut u);
        forward_differences(&u, dims.w, dims.h, &mut dx, &mut dy);
        std::mem::swap(&mut prev, &mut p);
        let (smu, skappa) = (tau * dims.mu, tau * dims.kappa);
        let update = |i: usize, px: &mut f64, py: &mut f64, q: &mut f64| {
            *px = y.px[i] + smu * dx[i];
            *py = y.py[i] + smu * dy[i];
            project_unit(px, py);
            if dims.full {
                *q = (y.q[i] + skappa * u[i]).clamp(-1.0, 1.0);
            }
        };
        if n >= PARALLEL_PIXELS {
            p.px
                .par_iter_mut()
                .zip(p.py.par_iter_mut())
                .zip(p.q.par_iter_mut())
                .enumerate()
                .for_each(|(i, ((px, py), q))| update(i, px, py, q));
        } else {
            for i in 0..n {
                let (px, py, q) = (&mut p.px[i], &mut p.py[i], &mut p.q[i]);
                update(i, px, py, q);
            }
        }

        // Restart when the momentum direction opposes the step just taken.
        let mut align = 0.0;
        for i in 0..n {
            align += (y.px[i] - p.px[i]) * (p.px[i] - prev.px[i])
                + (y.py[i] - p.py[i]) * (p.py[i] - prev.py[i])
                + (y.q[i] - p.q[i]) * (p.q[i] - prev.q[i]);
        }
        let t_next = if align > 0.0 {
            1.0
        } else {
            0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
        };
        let beta = if align > 0.0 { 0.0 } else { (t - 1.0) / t_next };
        for i in 0..n {
            y.px[i] = p.px[i] + beta * (p.px[i] - prev.px[i]);
            y.py[i] = p.py[i] + beta * (p.py[i] - prev.py[i]);
            y.q[i] = p.q[i] + beta * (p.q[i] - prev.q[i]);
        }
        t = t_next;

        if k % check == 0 || k == opts.max_iter {
            primal_from_dual(&f.data, &p, &dims, &mut div, &mut u);
            gap = raw_gap(&u, &p, &dims, &mut dx, &mut dy) / norm0;
            if gap <= opts.tol {
                return finish(u, p, k, gap, true);
            }
        }
    }
    primal_from_dual(&f.data, &p, &dims, &mut div, &mut u);
    finish(u, p, opts.max_iter, gap, false)
}

/// Plain projected gradient on the same dual, without acceleration.
///
/// Slow but simple; used as an independent reference.
pub fn rof_reference(f: &ImageGrid, lambda: f64, reg: TvRegularizer, tol: f64, max_iter: usize) -> RofSolution {
    let n = f.len();
    let dims = Dims {
        w: f.width,
        h: f.height,
        mu: 1.0 / (2.0 * lambda * f.h),
        kappa: 1.0 / (2.0 * lambda),
        full: reg.kind == TvKind::FullNorm,
    };
    let f_sq: f64 = f.data.iter().map(|v| v * v).sum();
    let norm0 = 0.5 * f_sq.max(f64::MIN_POSITIVE);
    let lip = 8.0 * dims.mu * dims.mu + if dims.full { dims.kappa * dims.kappa } else { 0.0 };
    let tau = 1.0 / lip;
    let mut p = DualField::zeros(n);
    let mut div = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut dx = vec![0.0; n];
    let mut dy = vec![0.0; n];
    let mut gap = f64::INFINITY;
    let mut k = 0;
    while k < max_iter {
        primal_from_dual(&f.data, &p, &dims, &mut div, &mut u);
        gap = raw_gap(&u, &p, &dims, &mut dx, &mut dy) / norm0;
        if gap <= tol {
            break;
        }
        for i in 0..n {
            p.px[i] += tau * dims.mu * dx[i];
            p.py[i] += tau * dims.mu * dy[i];
            let (mut a, mut b) = (p.px[i], p.py[i]);
            project_unit(&mut a, &mut b);
            p.px[i] = a;
            p.py[i] = b;
            if dims.full {
                p.q[i] = (p.q[i] + tau * dims.kappa * u[i]).clamp(-1.0, 1.0);
            }
        }
        k += 1;
    }
    primal_from_dual(&f.data, &p, &dims, &mut div, &mut u);
    let u = ImageGrid {
        data: u,
        ..f.clone()
    };
    let v = f.sub(&u);
    let objective = lambda * v.l2_norm_sq() + reg.value(&u);
    RofSolution {
        u,
        v,
        dual: p,
        iterations: k,
        primal_dual_gap: gap,
        converged: gap <= tol,
        objective,
    }
}
