//! Discrete total variation with forward differences and replicate boundary.
//!
//! `∇u(x, y) = (u(x+1, y) − u(x, y), u(x, y+1) − u(x, y)) / h`, with a zero
//! difference across the last column and row. The seminorm is
//! `J(u) = h² Σ |∇u| = h Σ |Δu|`; the full norm adds `h² Σ |u|`.

use serde::{Deserialize, Serialize};

use crate::grid::ImageGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TvKind {
    Seminorm,
    FullNorm,
}

impl std::str::FromStr for TvKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "seminorm" => Ok(TvKind::Seminorm),
            "fullnorm" | "full" | "full-norm" => Ok(TvKind::FullNorm),
            other => Err(format!("unknown regularizer `{other}` (expected seminorm or fullnorm)")),
        }
    }
}

impl std::fmt::Display for TvKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TvKind::Seminorm => "seminorm",
            TvKind::FullNorm => "fullnorm",
        })
    }
}

/// A TV regularizer. `epsilon_smoothing > 0` replaces `|g|` by `√(|g|² + ε²)`;
/// the exact solvers in this crate always use `ε = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvRegularizer {
    pub kind: TvKind,
    pub epsilon_smoothing: f64,
}

impl TvRegularizer {
    pub fn seminorm() -> Self {
        Self {
            kind: TvKind::Seminorm,
            epsilon_smoothing: 0.0,
        }
    }

    pub fn full_norm() -> Self {
        Self {
            kind: TvKind::FullNorm,
            epsilon_smoothing: 0.0,
        }
    }

    pub fn of_kind(kind: TvKind) -> Self {
        Self {
            kind,
            epsilon_smoothing: 0.0,
        }
    }

    pub fn value(&self, u: &ImageGrid) -> f64 {
        let tv = if self.epsilon_smoothing > 0.0 {
            smoothed_tv(u, self.epsilon_smoothing)
        } else {
            tv_seminorm(u)
        };
        match self.kind {
            TvKind::Seminorm => tv,
            TvKind::FullNorm => u.l1_norm() + tv,
        }
    }
}

/// Raw forward differences `(Δx, Δy)` without the `1/h` factor, each of image size.
pub fn forward_differences(data: &[f64], w: usize, hgt: usize, dx: &mut [f64], dy: &mut [f64]) {
    for y in 0..hgt {
        let row = y * w;
        for x in 0..w {
            let i = row + x;
            dx[i] = if x + 1 < w { data[i + 1] - data[i] } else { 0.0 };
            dy[i] = if y + 1 < hgt { data[i + w] - data[i] } else { 0.0 };
        }
    }
}

/// Negative adjoint of [`forward_differences`]: `⟨∇u, p⟩ = −⟨u, div p⟩`.
pub fn divergence(px: &[f64], py: &[f64], w: usize, hgt: usize, out: &mut [f64]) {
    for y in 0..hgt {
        let row = y * w;
        for x in 0..w {
            let i = row + x;
            let mut d = 0.0;
            if x + 1 < w {
                d += px[i];
            }
            if x > 0 {
                d -= px[i - 1];
            }
            if y + 1 < hgt {
                d += py[i];
            }
            if y > 0 {
                d -= py[i - w];
            }
            out[i] = d;
        }
    }
}

/// `Σ √(Δx² + Δy²)` over raw differences.
pub fn raw_tv(data: &[f64], w: usize, hgt: usize) -> f64 {
    let mut s = 0.0;
    for y in 0..hgt {
        let row = y * w;
        for x in 0..w {
            let i = row + x;
            let dx = if x + 1 < w { data[i + 1] - data[i] } else { 0.0 };
            let dy = if y + 1 < hgt { data[i + w] - data[i] } else { 0.0 };
            s += (dx * dx + dy * dy).sqrt();
        }
    }
    s
}

/// Isotropic TV seminorm `h Σ √(Δx² + Δy²)`.
pub fn tv_seminorm(u: &ImageGrid) -> f64 {
    u.h * raw_tv(&u.data, u.width, u.height)
}

/// `‖u‖_{L¹} + TV(u)`.
pub fn tv_full_norm(u: &ImageGrid) -> f64 {
    u.l1_norm() + tv_seminorm(u)
}

fn smoothed_tv(u: &ImageGrid, eps: f64) -> f64 {
    let (w, hgt) = (u.width, u.height);
    let mut dx = vec![0.0; u.len()];
    let mut dy = vec![0.0; u.len()];
    forward_differences(&u.data, w, hgt, &mut dx, &mut dy);
    let e2 = (eps * u.h) * (eps * u.h);
    u.h * dx
        .iter()
        .zip(&dy)
        .map(|(a, b)| (a * a + b * b + e2).sqrt())
        .sum::<f64>()
}
