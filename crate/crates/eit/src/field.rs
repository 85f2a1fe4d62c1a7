//! Piecewise-constant conductivities on the `M × M` cell grid of the unit square.
//!
//! Cells are stored row-major from the bottom-left corner: cell `(i, j)`
//! covers `[i/M, (i+1)/M] × [j/M, (j+1)/M]` and sits at index `j·M + i`.

use serde::{Deserialize, Serialize};

use crate::error::EitError;

pub(crate) fn check_bounds(a: f64, b: f64) -> Result<(), EitError> {
    if a.is_finite() && b.is_finite() && a > 0.0 && a <= b {
        Ok(())
    } else {
        Err(EitError::Bounds { a, b })
    }
}

/// A scalar conductivity `σ = s I` with ellipticity bounds `a_ell ≤ s ≤ b_ell`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductivityField {
    pub m: usize,
    pub values: Vec<f64>,
    pub a_ell: f64,
    pub b_ell: f64,
}

impl ConductivityField {
    pub fn new(m: usize, values: Vec<f64>, a_ell: f64, b_ell: f64) -> Result<Self, EitError> {
        if m == 0 {
            return Err(EitError::EmptyMesh);
        }
        check_bounds(a_ell, b_ell)?;
        if values.len() != m * m {
            return Err(EitError::Length {
                expected: m * m,
                got: values.len(),
            });
        }
        for (cell, &value) in values.iter().enumerate() {
            if !(value >= a_ell && value <= b_ell) {
                return Err(EitError::OutOfBounds {
                    cell,
                    value,
                    a: a_ell,
                    b: b_ell,
                });
            }
        }
        Ok(Self {
            m,
            values,
            a_ell,
            b_ell,
        })
    }

    pub fn constant(m: usize, s: f64, a_ell: f64, b_ell: f64) -> Result<Self, EitError> {
        Self::new(m, vec![s; m * m], a_ell, b_ell)
    }

    /// Builds a field from arbitrary values by projecting onto `[a_ell, b_ell]`.
    pub fn clamped(m: usize, values: &[f64], a_ell: f64, b_ell: f64) -> Result<Self, EitError> {
        check_bounds(a_ell, b_ell)?;
        let values = values.iter().map(|v| v.clamp(a_ell, b_ell)).collect();
        Self::new(m, values, a_ell, b_ell)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.m + i]
    }

    /// Cell width `1/M`.
    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    /// `(a_ell + b_ell) / 2`
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a_ell + self.b_ell)
    }

    /// Cell values as an image with pixel size `1/M`.
    pub fn to_image(&self) -> multiscale_tnv::ImageGrid {
        multiscale_tnv::ImageGrid {
            width: self.m,
            height: self.m,
            h: self.h(),
            data: self.values.clone(),
        }
    }

    /// One line per row of cells, top row first, comma-separated.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for j in (0..self.m).rev() {
            let row: Vec<String> = (0..self.m).map(|i| format!("{:?}", self.get(i, j))).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// A matrix-valued conductivity with per-cell entries `σ_11, σ_12, σ_21, σ_22`.
///
/// Admissible cells satisfy `σξ·ξ ≥ a|ξ|²` and `σ⁻¹ξ·ξ ≥ |ξ|²/b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorField {
    pub m: usize,
    /// Entries `[σ_11, σ_12, σ_21, σ_22]`, each of length `M²`.
    pub entries: [Vec<f64>; 4],
    pub a_ell: f64,
    pub b_ell: f64,
}

fn min_sym_eigen(m: [f64; 4]) -> f64 {
    let (p, q, r) = (m[0], 0.5 * (m[1] + m[2]), m[3]);
    0.5 * (p + r) - (0.25 * (p - r) * (p - r) + q * q).sqrt()
}

impl TensorField {
    pub fn new(m: usize, entries: [Vec<f64>; 4], a_ell: f64, b_ell: f64) -> Result<Self, EitError> {
        if m == 0 {
            return Err(EitError::EmptyMesh);
        }
        check_bounds(a_ell, b_ell)?;
        for e in &entries {
            if e.len() != m * m {
                return Err(EitError::Length {
                    expected: m * m,
                    got: e.len(),
                });
            }
        }
        let field = Self {
            m,
            entries,
            a_ell,
            b_ell,
        };
        for cell in 0..m * m {
            let s = field.cell(cell);
            let det = s[0] * s[3] - s[1] * s[2];
            let lower = min_sym_eigen(s);
            let inv = [s[3] / det, -s[1] / det, -s[2] / det, s[0] / det];
            let tol = 1e-12 * b_ell;
            if !(det > 0.0 && lower >= a_ell - tol && min_sym_eigen(inv) >= 1.0 / b_ell - tol / (b_ell * b_ell)) {
                return Err(EitError::OutOfBounds {
                    cell,
                    value: lower,
                    a: a_ell,
                    b: b_ell,
                });
            }
        }
        Ok(field)
    }

    /// The isotropic tensor `s I`.
    pub fn from_scalar(field: &ConductivityField) -> Self {
        let zeros = vec![0.0; field.len()];
        Self {
            m: field.m,
            entries: [field.values.clone(), zeros.clone(), zeros, field.values.clone()],
            a_ell: field.a_ell,
            b_ell: field.b_ell,
        }
    }

    pub fn cell(&self, c: usize) -> [f64; 4] {
        [self.entries[0][c], self.entries[1][c], self.entries[2][c], self.entries[3][c]]
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries[1] == self.entries[2]
    }
}
