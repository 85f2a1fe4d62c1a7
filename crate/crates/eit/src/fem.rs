//! Bilinear (Q1) finite elements for `−div(σ∇v) = 0` with Neumann data.
//!
//! Nodes are numbered `j·(M+1) + i` for the point `(i/M, j/M)`. The
//! boundary is traversed counterclockwise from the origin, one node per
//! `1/M` of arc length, with trapezoidal weights `w_b = 1/M`. A current `g`
//! enters the load as `w_b g_b`. The stiffness matrix is singular only along
//! constants; the system is solved with node 0 pinned by a banded Cholesky
//! factorization, after which the constant is fixed by the zero-mean
//! condition `Σ w_b v_b = 0`.

use crate::error::EitError;
use crate::field::ConductivityField;

/// Q1 stiffness of a unit-conductivity square cell, local nodes counterclockwise
/// from the bottom-left corner. Independent of the cell size in 2-D.
pub const CELL_STIFFNESS: [[f64; 4]; 4] = [
    [4.0 / 6.0, -1.0 / 6.0, -2.0 / 6.0, -1.0 / 6.0],
    [-1.0 / 6.0, 4.0 / 6.0, -1.0 / 6.0, -2.0 / 6.0],
    [-2.0 / 6.0, -1.0 / 6.0, 4.0 / 6.0, -1.0 / 6.0],
    [-1.0 / 6.0, -2.0 / 6.0, -1.0 / 6.0, 4.0 / 6.0],
];

/// Relative residual required of every linear solve.
pub const RESIDUAL_LIMIT: f64 = 1e-10;

/// Structured mesh of `M × M` square cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FemMesh {
    pub m: usize,
}

impl FemMesh {
    pub fn new(m: usize) -> Result<Self, EitError> {
        if m == 0 {
            return Err(EitError::EmptyMesh);
        }
        Ok(Self { m })
    }

    pub fn n_nodes(&self) -> usize {
        (self.m + 1) * (self.m + 1)
    }

    pub fn n_cells(&self) -> usize {
        self.m * self.m
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        j * (self.m + 1) + i
    }

    /// Local-to-global node map of cell `c`.
    pub fn cell_nodes(&self, c: usize) -> [usize; 4] {
        let (i, j) = (c % self.m, c / self.m);
        [
            self.node(i, j),
            self.node(i + 1, j),
            self.node(i + 1, j + 1),
            self.node(i, j + 1),
        ]
    }

    /// Boundary nodes in counterclockwise order starting at `(0, 0)`.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let m = self.m;
        let mut out = Vec::with_capacity(4 * m);
        out.extend((0..m).map(|i| self.node(i, 0)));
        out.extend((0..m).map(|j| self.node(m, j)));
        out.extend((0..m).map(|i| self.node(m - i, m)));
        out.extend((0..m).map(|j| self.node(0, m - j)));
        out
    }

    /// Arc-length position of each boundary node, in `[0, 4)`.
    pub fn boundary_arclength(&self) -> Vec<f64> {
        let h = 1.0 / self.m as f64;
        (0..4 * self.m).map(|b| b as f64 * h).collect()
    }

    /// Trapezoidal quadrature weights on the boundary nodes.
    pub fn boundary_weights(&self) -> Vec<f64> {
        vec![1.0 / self.m as f64; 4 * self.m]
    }

    /// `K(σ) u` for nodal `u`.
    pub fn apply_stiffness(&self, sigma: &[f64], u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_nodes()];
        for (c, &s) in sigma.iter().enumerate() {
            let nodes = self.cell_nodes(c);
            for a in 0..4 {
                let mut acc = 0.0;
                for b in 0..4 {
                    acc += CELL_STIFFNESS[a][b] * u[nodes[b]];
                }
                out[nodes[a]] += s * acc;
            }
        }
        out
    }

    /// `u_cᵀ K_e v_c` on cell `c` with unit conductivity.
    pub fn cell_form(&self, c: usize, u: &[f64], v: &[f64]) -> f64 {
        let nodes = self.cell_nodes(c);
        let mut s = 0.0;
        for a in 0..4 {
            let mut acc = 0.0;
            for b in 0..4 {
                acc += CELL_STIFFNESS[a][b] * v[nodes[b]];
            }
            s += u[nodes[a]] * acc;
        }
        s
    }

    /// Factors `K(σ)` for repeated Neumann solves.
    pub fn factor(&self, sigma: &ConductivityField) -> Result<NeumannFactor, EitError> {
        if sigma.m != self.m {
            return Err(EitError::Length {
                expected: self.n_cells(),
                got: sigma.len(),
            });
        }
        NeumannFactor::new(*self, &sigma.values)
    }
}

/// Cholesky factor of the pinned stiffness matrix, stored by lower band.
#[derive(Debug, Clone)]
pub struct NeumannFactor {
    mesh: FemMesh,
    sigma: Vec<f64>,
    bw: usize,
    /// Row `r` holds `L[r][r − d]` at `r·(bw+1) + d`.
    band: Vec<f64>,
    boundary: Vec<usize>,
    weights: Vec<f64>,
    /// `(max L_rr / min L_rr)²`
    pub condition_estimate: f64,
}

impl NeumannFactor {
    fn new(mesh: FemMesh, sigma: &[f64]) -> Result<Self, EitError> {
        let n = mesh.n_nodes() - 1;
        let bw = mesh.m + 2;
        let stride = bw + 1;
        let mut band = vec![0.0; n * stride];
        for (c, &s) in sigma.iter().enumerate() {
            let nodes = mesh.cell_nodes(c);
            for a in 0..4 {
                for b in 0..4 {
                    let (p, q) = (nodes[a], nodes[b]);
                    if p == 0 || q == 0 || q > p {
                        continue;
                    }
                    band[(p - 1) * stride + (p - q)] += s * CELL_STIFFNESS[a][b];
                }
            }
        }
        let diag0: Vec<f64> = (0..n).map(|r| band[r * stride]).collect();
        let mut lmin = f64::INFINITY;
        let mut lmax: f64 = 0.0;
        for r in 0..n {
            let first = r.saturating_sub(bw);
            for c in first..=r {
                let mut s = band[r * stride + (r - c)];
                let lo = first.max(c.saturating_sub(bw));
                for k in lo..c {
                    s -= band[r * stride + (r - k)] * band[c * stride + (c - k)];
                }
                if c == r {
                    let orig = diag0[r];
                    if !(s > 1e-13 * orig && s.is_finite()) {
                        let est = if s > 0.0 { orig / s } else { f64::INFINITY };
                        return Err(EitError::IllConditioned {
                            condition_estimate: est,
                        });
                    }
                    let l = s.sqrt();
                    band[r * stride] = l;
                    lmin = lmin.min(l);
                    lmax = lmax.max(l);
                } else {
                    band[r * stride + (r - c)] = s / band[c * stride];
                }
            }
        }
        Ok(Self {
            mesh,
            sigma: sigma.to_vec(),
            bw,
            band,
            boundary: mesh.boundary_nodes(),
            weights: mesh.boundary_weights(),
            condition_estimate: (lmax / lmin).powi(2),
        })
    }

    pub fn mesh(&self) -> FemMesh {
        self.mesh
    }

    /// Solves `K v = load` for a nodal load orthogonal to constants, then
    /// shifts `v` to zero boundary mean.
    fn solve_pinned(&self, load: &[f64]) -> Vec<f64> {
        let n = load.len() - 1;
        let stride = self.bw + 1;
        let mut y: Vec<f64> = load[1..].to_vec();
        for r in 0..n {
            let mut s = y[r];
            for k in r.saturating_sub(self.bw)..r {
                s -= self.band[r * stride + (r - k)] * y[k];
            }
            y[r] = s / self.band[r * stride];
        }
        for r in (0..n).rev() {
            let mut s = y[r];
            for k in r + 1..(r + self.bw + 1).min(n) {
                s -= self.band[k * stride + (k - r)] * y[k];
            }
            y[r] = s / self.band[r * stride];
        }
        let mut v = Vec::with_capacity(n + 1);
        v.push(0.0);
        v.extend_from_slice(&y);
        let total: f64 = self.weights.iter().sum();
        let mean: f64 = self
            .boundary
            .iter()
            .zip(&self.weights)
            .map(|(&b, w)| w * v[b])
            .sum::<f64>()
            / total;
        v.iter_mut().for_each(|x| *x -= mean);
        v
    }

    /// Neumann solve for boundary current `g` sampled on the boundary nodes.
    pub fn solve(&self, g: &[f64]) -> Result<NeumannSolution, EitError> {
        if g.len() != self.boundary.len() {
            return Err(EitError::Length {
                expected: self.boundary.len(),
                got: g.len(),
            });
        }
        let total: f64 = self.weights.iter().sum();
        let mean = g.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>() / total;
        let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if mean.abs() > 1e-12 * scale {
            return Err(EitError::NonZeroMean { mean });
        }
        let mut load = vec![0.0; self.mesh.n_nodes()];
        for ((&b, &w), &gb) in self.boundary.iter().zip(&self.weights).zip(g) {
            load[b] += w * gb;
        }
        let mut v = self.solve_pinned(&load);
        let mut residual = self.residual(&v, &load);
        if residual > RESIDUAL_LIMIT {
            let kv = self.mesh.apply_stiffness(&self.sigma, &v);
            let r: Vec<f64> = load.iter().zip(&kv).map(|(a, b)| a - b).collect();
            let dv = self.solve_pinned(&r);
            v.iter_mut().zip(&dv).for_each(|(a, b)| *a += b);
            residual = self.residual(&v, &load);
            if residual > RESIDUAL_LIMIT {
                return Err(EitError::Residual {
                    residual,
                    limit: RESIDUAL_LIMIT,
                });
            }
        }
        let trace = self.boundary.iter().map(|&b| v[b]).collect();
        Ok(NeumannSolution {
            nodal: v,
            trace,
            residual,
        })
    }

    fn residual(&self, v: &[f64], load: &[f64]) -> f64 {
        let kv = self.mesh.apply_stiffness(&self.sigma, v);
        let num: f64 = load.iter().zip(&kv).map(|(a, b)| (a - b) * (a - b)).sum();
        let den: f64 = load.iter().map(|a| a * a).sum();
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }
}

/// Nodal FEM solution and its boundary trace.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannSolution {
    pub nodal: Vec<f64>,
    /// Values on [`FemMesh::boundary_nodes`], with zero weighted mean.
    pub trace: Vec<f64>,
    /// `‖K v − b‖ / ‖b‖`
    pub residual: f64,
}

/// Solves the Neumann problem for conductivity `sigma` and boundary current `g`.
pub fn solve_neumann(sigma: &ConductivityField, g: &[f64]) -> Result<NeumannSolution, EitError> {
    FemMesh::new(sigma.m)?.factor(sigma)?.solve(g)
}
