//! Neumann-to-Dirichlet matrices on a current basis, and distances between them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::CurrentBasis;
use crate::error::EitError;
use crate::fem::{FemMesh, NeumannFactor};
use crate::field::ConductivityField;

/// `N_ij = ⟨g_i, v_j|_∂Ω⟩`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NtdMatrix {
    pub k: usize,
    pub data: Vec<f64>,
    /// Cells per side of the mesh the matrix was computed on.
    pub mesh: usize,
    pub basis_id: String,
}

impl NtdMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.k + j]
    }

    pub fn is_compatible(&self, other: &Self) -> Result<(), EitError> {
        if self.k != other.k {
            return Err(EitError::Mismatch {
                what: "size",
                left: self.k.to_string(),
                right: other.k.to_string(),
            });
        }
        if self.basis_id != other.basis_id {
            return Err(EitError::Mismatch {
                what: "basis",
                left: self.basis_id.clone(),
                right: other.basis_id.clone(),
            });
        }
        Ok(())
    }

    /// `max_ij |N_ij − N_ji|`
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.k {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            data: self.data.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    /// One matrix row per line, shortest round-trip decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.data.chunks(self.k) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses a square CSV matrix written by [`NtdMatrix::to_csv`].
    pub fn from_csv(text: &str, mesh: usize, basis_id: &str) -> Result<Self, EitError> {
        let mut data = Vec::new();
        let mut rows = 0;
        for (ln, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            for field in line.split(',') {
                let v: f64 = field.trim().parse().map_err(|_| {
                    EitError::Phantom(format!("line {}: `{}` is not a number", ln + 1, field.trim()))
                })?;
                data.push(v);
            }
            rows += 1;
        }
        if rows == 0 || data.len() != rows * rows {
            return Err(EitError::Length {
                expected: rows * rows,
                got: data.len(),
            });
        }
        Ok(Self {
            k: rows,
            data,
            mesh,
            basis_id: basis_id.to_string(),
        })
    }
}

/// NtD matrix together with the nodal states `v_j` that produced it.
#[derive(Debug, Clone)]
pub struct NtdStates {
    pub matrix: NtdMatrix,
    pub states: Vec<Vec<f64>>,
    pub mesh: FemMesh,
}

fn check_basis(sigma: &ConductivityField, basis: &CurrentBasis) -> Result<(), EitError> {
    if sigma.m != basis.m {
        return Err(EitError::Mismatch {
            what: "mesh",
            left: sigma.m.to_string(),
            right: basis.m.to_string(),
        });
    }
    Ok(())
}

/// Solves all `K` Neumann problems and assembles the NtD matrix.
pub fn ntd_with_states(sigma: &ConductivityField, basis: &CurrentBasis) -> Result<NtdStates, EitError> {
    check_basis(sigma, basis)?;
    let mesh = FemMesh::new(sigma.m)?;
    let factor = mesh.factor(sigma)?;
    ntd_from_factor(&factor, basis)
}

pub(crate) fn ntd_from_factor(factor: &NeumannFactor, basis: &CurrentBasis) -> Result<NtdStates, EitError> {
    let solutions: Vec<_> = basis
        .patterns
        .par_iter()
        .map(|g| factor.solve(g))
        .collect::<Result<_, _>>()?;
    let k = basis.k();
    let mut data = vec![0.0; k * k];
    for i in 0..k {
        for (j, sol) in solutions.iter().enumerate() {
            data[i * k + j] = basis.inner(&basis.patterns[i], &sol.trace);
        }
    }
    let mesh = factor.mesh();
    Ok(NtdStates {
        matrix: NtdMatrix {
            k,
            data,
            mesh: mesh.m,
            basis_id: basis.id.clone(),
        },
        states: solutions.into_iter().map(|s| s.nodal).collect(),
        mesh,
    })
}

pub fn ntd_matrix(sigma: &ConductivityField, basis: &CurrentBasis) -> Result<NtdMatrix, EitError> {
    Ok(ntd_with_states(sigma, basis)?.matrix)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Operator norm on the span of the basis.
    Spectral,
    /// Frobenius norm.
    HilbertSchmidt,
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "spectral" => Ok(Metric::Spectral),
            "hs" | "hilbertschmidt" | "hilbert-schmidt" | "frobenius" => Ok(Metric::HilbertSchmidt),
            other => Err(format!("unknown metric `{other}` (expected spectral or hs)")),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::Spectral => "spectral",
            Metric::HilbertSchmidt => "hilbertschmidt",
        })
    }
}

/// Top singular triple `(s, u, v)` of a `k × k` matrix with `A v = s u`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularTriple {
    pub value: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub iterations: usize,
}

/// Power iteration on `AᵀA`, stopped when the estimated error of the
/// singular value is below `tol` relative.
pub fn top_singular(a: &[f64], k: usize, tol: f64, max_iter: usize) -> SingularTriple {
    let mut b = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            b[i * k + j] = (0..k).map(|r| a[r * k + i] * a[r * k + j]).sum();
        }
    }
    // Start from the largest column of AᵀA, which cannot be orthogonal to
    // the top singular vector unless AᵀA = 0.
    let col_norm = |j: usize| (0..k).map(|i| b[i * k + j] * b[i * k + j]).sum::<f64>();
    let best = (0..k).max_by(|&p, &q| col_norm(p).total_cmp(&col_norm(q))).unwrap_or(0);
    let mut x: Vec<f64> = (0..k).map(|i| b[i * k + best]).collect();
    let mut y = vec![0.0; k];
    let mut rho_prev = f64::NAN;
    let mut delta_prev = f64::NAN;
    let mut it = 0;
    let start = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if start > 0.0 {
        x.iter_mut().for_each(|v| *v /= start);
        while it < max_iter {
            it += 1;
            for i in 0..k {
                y[i] = (0..k).map(|j| b[i * k + j] * x[j]).sum();
            }
            let rho: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
            let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if ny == 0.0 {
                break;
            }
            x.iter_mut().zip(&y).for_each(|(p, q)| *p = q / ny);
            let delta = (rho - rho_prev).abs();
            rho_prev = rho;
            if it > 4 && delta.is_finite() && delta_prev.is_finite() {
                let q = if delta_prev > 0.0 { delta / delta_prev } else { 0.0 };
                let remaining = if q < 1.0 { delta * q / (1.0 - q) } else { f64::INFINITY };
                // `rho` is a squared singular value, so halve the relative error.
                if delta <= 1e-15 * rho || 0.5 * remaining <= tol * rho {
                    break;
                }
            }
            delta_prev = delta;
        }
    } else {
        x = vec![0.0; k];
        if k > 0 {
            x[0] = 1.0;
        }
    }
    let ax: Vec<f64> = (0..k).map(|i| (0..k).map(|j| a[i * k + j] * x[j]).sum()).collect();
    let value = ax.iter().map(|v| v * v).sum::<f64>().sqrt();
    let left = if value > 0.0 {
        ax.iter().map(|v| v / value).collect()
    } else {
        x.clone()
    };
    SingularTriple {
        value,
        left,
        right: x,
        iterations: it,
    }
}

/// Distance of a raw `k × k` difference matrix.
pub fn matrix_norm(d: &[f64], k: usize, metric: Metric) -> f64 {
    match metric {
        Metric::HilbertSchmidt => d.iter().map(|v| v * v).sum::<f64>().sqrt(),
        Metric::Spectral => top_singular(d, k, 1e-12, 1_000_000).value,
    }
}

/// `‖n1 − n2‖` in the chosen metric.
pub fn ntd_distance(n1: &NtdMatrix, n2: &NtdMatrix, metric: Metric) -> Result<f64, EitError> {
    n1.is_compatible(n2)?;
    let d: Vec<f64> = n1.data.iter().zip(&n2.data).map(|(a, b)| a - b).collect();
    Ok(matrix_norm(&d, n1.k, metric))
}
