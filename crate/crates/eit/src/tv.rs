//! Total variation of conductivities, on the same stencil as the image code.

use multiscale_tnv::tv::raw_tv;
use multiscale_tnv::TvKind;

use crate::field::{ConductivityField, TensorField};

/// Isotropic discrete TV of the cell image (`Seminorm`) or `L¹ + TV` (`FullNorm`).
pub fn tv_conductivity(sigma: &ConductivityField, kind: TvKind) -> f64 {
    tv_cells(&sigma.values, sigma.m, kind)
}

/// As [`tv_conductivity`] for raw cell values on an `m × m` grid.
pub fn tv_cells(values: &[f64], m: usize, kind: TvKind) -> f64 {
    let h = 1.0 / m as f64;
    let tv = h * raw_tv(values, m, m);
    match kind {
        TvKind::Seminorm => tv,
        TvKind::FullNorm => h * h * values.iter().map(|v| v.abs()).sum::<f64>() + tv,
    }
}

/// `√(Δx² + Δy² + ε²)`-smoothed version of [`tv_cells`] and its gradient.
///
/// With `ε > 0` the absolute value in the `L¹` part is smoothed the same way.
pub fn smoothed_tv_cells(values: &[f64], m: usize, kind: TvKind, eps: f64, grad: &mut [f64]) -> f64 {
    let h = 1.0 / m as f64;
    let eps2 = eps * eps;
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut tv = 0.0;
    for j in 0..m {
        for i in 0..m {
            let c = j * m + i;
            let dx = if i + 1 < m { values[c + 1] - values[c] } else { 0.0 };
            let dy = if j + 1 < m { values[c + m] - values[c] } else { 0.0 };
            let r = (dx * dx + dy * dy + eps2).sqrt();
            tv += r - eps;
            if r > 0.0 {
                if i + 1 < m {
                    grad[c + 1] += h * dx / r;
                    grad[c] -= h * dx / r;
                }
                if j + 1 < m {
                    grad[c + m] += h * dy / r;
                    grad[c] -= h * dy / r;
                }
            }
        }
    }
    let mut value = h * tv;
    if kind == TvKind::FullNorm {
        let w = h * h;
        for (c, &v) in values.iter().enumerate() {
            let r = (v * v + eps2).sqrt();
            value += w * (r - eps);
            if r > 0.0 {
                grad[c] += w * v / r;
            }
        }
    }
    value
}

/// Entrywise total variations `TV(σ_ij)`.
pub fn tv_tensor(field: &TensorField) -> [[f64; 2]; 2] {
    let tv = |k: usize| tv_cells(&field.entries[k], field.m, TvKind::Seminorm);
    [[tv(0), tv(1)], [tv(2), tv(3)]]
}

/// Largest singular value of a 2×2 matrix.
pub fn operator_norm_2x2(a: [[f64; 2]; 2]) -> f64 {
    let (p, q, r, s) = (a[0][0], a[0][1], a[1][0], a[1][1]);
    let t = p * p + q * q + r * r + s * s;
    let d = p * s - q * r;
    (0.5 * (t + (t * t - 4.0 * d * d).max(0.0).sqrt())).sqrt()
}

/// `|σ|_BV = ‖TV(σ)‖` (`Seminorm`) or `‖σ‖_{L¹} + |σ|_BV` (`FullNorm`), with
/// the operator norm on matrices.
pub fn tv_tensor_field(field: &TensorField, kind: TvKind) -> f64 {
    let semi = operator_norm_2x2(tv_tensor(field));
    match kind {
        TvKind::Seminorm => semi,
        TvKind::FullNorm => {
            let area = 1.0 / (field.m * field.m) as f64;
            let l1: f64 = (0..field.m * field.m)
                .map(|c| {
                    let s = field.cell(c);
                    operator_norm_2x2([[s[0], s[1]], [s[2], s[3]]])
                })
                .sum();
            area * l1 + semi
        }
    }
}
