//! The dual norm `‖v‖_* = sup { h² ⟨v, w⟩ : J(w) ≤ 1 }`.
//!
//! Writing `J(w) = h² ‖Bᵀ w‖₁` with `Bᵀ w = (w, ∇w / h)` (the first block
//! only for the full norm), linear-programming duality gives
//!
//! ```text
//! ‖v‖_* = min { max(‖p‖_∞, ‖q‖_∞) : q − div p / h = v }
//! ```
//!
//! Any `w` yields the lower bound `h²⟨v, w⟩ / J(w)` and any feasible `(p, q)`
//! the upper bound `max(‖p‖_∞, ‖q‖_∞)`. Both are driven together by a
//! primal–dual (Chambolle–Pock) iteration on the min-norm problem; feasible
//! points are obtained by projecting onto `{Bz = v}` with conjugate gradients.

use crate::grid::ImageGrid;
use crate::rof::DualField;
use crate::tv::{divergence, forward_differences, TvKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualNormEstimate {
    /// Midpoint of the certified bracket.
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// `upper − lower`
    pub achieved_tol: f64,
    pub iterations: usize,
}

impl DualNormEstimate {
    fn exact(v: f64) -> Self {
        Self {
            value: v,
            lower: v,
            upper: v,
            achieved_tol: 0.0,
            iterations: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualNormOptions {
    /// Absolute target for `upper − lower`.
    pub tol: f64,
    pub max_iter: usize,
    pub check_every: usize,
}

impl DualNormOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            max_iter: 200_000,
            check_every: 50,
        }
    }
}

/// Starting points for the bracket: a representation of `v` and a test image.
#[derive(Debug, Clone)]
pub struct WarmStart<'a> {
    /// `p`, `q` such that approximately `v = q − div p / h`.
    pub field: &'a DualField,
    pub test: &'a ImageGrid,
}

struct Op {
    w: usize,
    h: usize,
    inv_h: f64,
    full: bool,
}

impl Op {
    /// `B z = q − div p / h`
    fn apply(&self, z: &DualField, div: &mut [f64], out: &mut [f64]) {
        divergence(&z.px, &z.py, self.w, self.h, div);
        for i in 0..out.len() {
            out[i] = -self.inv_h * div[i] + if self.full { z.q[i] } else { 0.0 };
        }
    }

    /// `Bᵀ y = (∇y / h, y)`
    fn adjoint(&self, y: &[f64], out: &mut DualField) {
        forward_differences(y, self.w, self.h, &mut out.px, &mut out.py);
        for i in 0..y.len() {
            out.px[i] *= self.inv_h;
            out.py[i] *= self.inv_h;
            out.q[i] = if self.full { y[i] } else { 0.0 };
        }
    }

    /// `‖Bᵀ y‖₁ = Σ |∇y| / h (+ Σ |y|)`
    fn adjoint_l1(&self, y: &[f64], scratch: &mut DualField) -> f64 {
        self.adjoint(y, scratch);
        let mut s = 0.0;
        for i in 0..y.len() {
            s += (scratch.px[i] * scratch.px[i] + scratch.py[i] * scratch.py[i]).sqrt();
            if self.full {
                s += y[i].abs();
            }
        }
        s
    }

    fn norm_sq_bound(&self) -> f64 {
        8.0 * self.inv_h * self.inv_h + if self.full { 1.0 } else { 0.0 }
    }

    /// Solves `B Bᵀ x = r` by conjugate gradients (on the zero-mean subspace for the seminorm).
    fn solve_normal(&self, r: &[f64], tol: f64) -> Vec<f64> {
        let n = r.len();
        let mut rhs = r.to_vec();
        if !self.full {
            remove_mean(&mut rhs);
        }
        let mut x = vec![0.0; n];
        let mut res = rhs.clone();
        let mut d = res.clone();
        let mut tmp = DualField::zeros(n);
        let mut div = vec![0.0; n];
        let mut ad = vec![0.0; n];
        let mut rr: f64 = res.iter().map(|v| v * v).sum();
        let stop = tol * tol * rr.max(f64::MIN_POSITIVE);
        for _ in 0..(10 * n + 100) {
            if rr <= stop {
                break;
            }
            self.adjoint(&d, &mut tmp);
            self.apply(&tmp, &mut div, &mut ad);
            let dad: f64 = d.iter().zip(&ad).map(|(a, b)| a * b).sum();
            if dad <= 0.0 {
                break;
            }
            let alpha = rr / dad;
            for i in 0..n {
                x[i] += alpha * d[i];
                res[i] -= alpha * ad[i];
            }
            if !self.full {
                remove_mean(&mut res);
            }
            let rr_new: f64 = res.iter().map(|v| v * v).sum();
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..n {
                d[i] = res[i] + beta * d[i];
            }
        }
        x
    }

    /// Closest point to `z` in `{B z = v}`.
    fn project_feasible(&self, z: &DualField, v: &[f64]) -> DualField {
        let n = v.len();
        let mut div = vec![0.0; n];
        let mut bz = vec![0.0; n];
        self.apply(z, &mut div, &mut bz);
        let r: Vec<f64> = v.iter().zip(&bz).map(|(a, b)| a - b).collect();
        let x = self.solve_normal(&r, 1e-14);
        let mut corr = DualField::zeros(n);
        self.adjoint(&x, &mut corr);
        let mut out = z.clone();
        for i in 0..n {
            out.px[i] += corr.px[i];
            out.py[i] += corr.py[i];
            if self.full {
                out.q[i] += corr.q[i];
            }
        }
        out
    }
}

fn remove_mean(x: &mut [f64]) {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    for v in x.iter_mut() {
        *v -= m;
    }
}

/// Euclidean projection of grouped values onto `{ Σ_g |x_g| ≤ 1 }`,
/// where groups are `(px_i, py_i)` and `q_i`.
fn project_group_l1_ball(x: &mut DualField, full: bool) {
    let n = x.px.len();
    let mut norms: Vec<f64> = Vec::with_capacity(2 * n);
    for i in 0..n {
        norms.push((x.px[i] * x.px[i] + x.py[i] * x.py[i]).sqrt());
    }
    if full {
        norms.extend(x.q.iter().map(|v| v.abs()));
    }
    let total: f64 = norms.iter().sum();
    if total <= 1.0 {
        return;
    }
    let mut sorted = norms.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite norms"));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, s) in sorted.iter().enumerate() {
        cum += s;
        let t = (cum - 1.0) / (k + 1) as f64;
        if k + 1 == sorted.len() || sorted[k + 1] <= t {
            theta = t;
            break;
        }
    }
    for i in 0..n {
        let nm = norms[i];
        let s = if nm > theta { (nm - theta) / nm } else { 0.0 };
        x.px[i] *= s;
        x.py[i] *= s;
    }
    if full {
        for i in 0..n {
            let nm = norms[n + i];
            x.q[i] = if nm > theta { x.q[i] * (nm - theta) / nm } else { 0.0 };
        }
    }
}

/// `max(‖p‖_∞, ‖q‖_∞)`
fn sup_norm(z: &DualField, full: bool) -> f64 {
    let mut m = 0.0f64;
    for i in 0..z.px.len() {
        m = m.max((z.px[i] * z.px[i] + z.py[i] * z.py[i]).sqrt());
        if full {
            m = m.max(z.q[i].abs());
        }
    }
    m
}

/// Estimates `‖v‖_*` for the given regularizer kind to absolute bracket width `tol`.
pub fn dual_norm_star(v: &ImageGrid, kind: TvKind, tol: f64) -> DualNormEstimate {
    dual_norm_star_with(v, kind, DualNormOptions::new(tol), None)
}

pub fn dual_norm_star_with(
    v: &ImageGrid,
    kind: TvKind,
    opts: DualNormOptions,
    warm: Option<WarmStart<'_>>,
) -> DualNormEstimate {
    let n = v.len();
    if v.data.iter().all(|&x| x == 0.0) {
        return DualNormEstimate::exact(0.0);
    }
    let full = kind == TvKind::FullNorm;
    if !full {
        let mean = v.mean();
        if mean.abs() > 1e-12 * v.max_abs() {
            // The seminorm vanishes on constants, so the supremum is unbounded.
            return DualNormEstimate::exact(f64::INFINITY);
        }
    }
    let op = Op {
        w: v.width,
        h: v.height,
        inv_h: 1.0 / v.h,
        full,
    };
    let mut scratch = DualField::zeros(n);
    let lower_of = |y: &[f64], scratch: &mut DualField| {
        let den = op.adjoint_l1(y, scratch);
        if den > 0.0 {
            v.data.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / den
        } else {
            0.0
        }
    };

    let mut z = match &warm {
        Some(ws) => op.project_feasible(ws.field, &v.data),
        None => op.project_feasible(&DualField::zeros(n), &v.data),
    };
    let mut upper = sup_norm(&z, full);
    let mut lower = lower_of(&v.data, &mut scratch).max(0.0);
    if let Some(ws) = &warm {
        lower = lower.max(lower_of(&ws.test.data, &mut scratch));
    }
    if upper - lower <= opts.tol {
        return bracket(lower, upper, 0);
    }

    let lip = op.norm_sq_bound().sqrt();
    let tau = 0.99 / lip;
    let sigma = 0.99 / lip;
    let mut y = vec![0.0; n];
    let mut zbar = z.clone();
    let mut bz = vec![0.0; n];
    let mut div = vec![0.0; n];
    let mut bty = DualField::zeros(n);
    let check = opts.check_every.max(1);

    for k in 1..=opts.max_iter {
        op.apply(&zbar, &mut div, &mut bz);
        for i in 0..n {
            y[i] += sigma * (bz[i] - v.data[i]);
        }
        op.adjoint(&y, &mut bty);
        let z_old = z.clone();
        // prox of τ‖·‖_∞ via Moreau: x − τ Π_{‖·‖₁ ≤ 1}(x / τ).
        let mut x = z.clone();
        for i in 0..n {
            x.px[i] -= tau * bty.px[i];
            x.py[i] -= tau * bty.py[i];
            if full {
                x.q[i] -= tau * bty.q[i];
            }
        }
        let mut s = x.clone();
        for i in 0..n {
            s.px[i] /= tau;
            s.py[i] /= tau;
            s.q[i] /= tau;
        }
        project_group_l1_ball(&mut s, full);
        for i in 0..n {
            z.px[i] = x.px[i] - tau * s.px[i];
            z.py[i] = x.py[i] - tau * s.py[i];
            z.q[i] = if full { x.q[i] - tau * s.q[i] } else { 0.0 };
        }
        for i in 0..n {
            zbar.px[i] = 2.0 * z.px[i] - z_old.px[i];
            zbar.py[i] = 2.0 * z.py[i] - z_old.py[i];
            zbar.q[i] = 2.0 * z.q[i] - z_old.q[i];
        }
        if k % check == 0 {
            let feas = op.project_feasible(&z, &v.data);
            upper = upper.min(sup_norm(&feas, full));
            let neg: Vec<f64> = y.iter().map(|a| -a).collect();
            lower = lower.max(lower_of(&neg, &mut scratch));
            if upper - lower <= opts.tol {
                return bracket(lower, upper, k);
            }
        }
    }
    bracket(lower, upper, opts.max_iter)
}

fn bracket(lower: f64, upper: f64, iterations: usize) -> DualNormEstimate {
    let lower = lower.min(upper);
    DualNormEstimate {
        value: 0.5 * (lower + upper),
        lower,
        upper,
        achieved_tol: upper - lower,
        iterations,
    }
}

/// Rescales an ROF dual field at weight `λ` into a representation of `v = f − u`
/// in the form used by [`dual_norm_star_with`]: `p ↦ p / (2λ)`, `q ↦ q / (2λ)`.
pub fn rof_representation(dual: &DualField, lambda: f64, kind: TvKind) -> DualField {
    let s = 1.0 / (2.0 * lambda);
    DualField {
        px: dual.px.iter().map(|v| v * s).collect(),
        py: dual.py.iter().map(|v| v * s).collect(),
        q: match kind {
            TvKind::FullNorm => dual.q.iter().map(|v| v * s).collect(),
            TvKind::Seminorm => vec![0.0; dual.q.len()],
        },
    }
}
