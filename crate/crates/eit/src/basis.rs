//! Trigonometric boundary current patterns.

use serde::{Deserialize, Serialize};

use crate::error::EitError;
use crate::fem::FemMesh;

/// `K` zero-mean current patterns on the boundary nodes, orthonormal in the
/// discrete `L²(∂Ω)` inner product `⟨f, g⟩ = Σ w_b f_b g_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrentBasis {
    pub m: usize,
    pub patterns: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub id: String,
}

impl CurrentBasis {
    /// `cos(θ), sin(θ), cos(2θ), sin(2θ), …` with `θ = 2πs/4` in arc length
    /// `s`, orthonormalized by two passes of modified Gram–Schmidt.
    pub fn trig(m: usize, k: usize) -> Result<Self, EitError> {
        let mesh = FemMesh::new(m)?;
        let max = 4 * m - 1;
        let too_many = || EitError::BasisSize { k, m, max };
        if k == 0 || k > max {
            return Err(too_many());
        }
        let s = mesh.boundary_arclength();
        let weights = mesh.boundary_weights();
        let dot = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).zip(&weights).map(|((x, y), w)| w * x * y).sum()
        };
        let total: f64 = weights.iter().sum();
        let mut patterns: Vec<Vec<f64>> = Vec::with_capacity(k);
        for idx in 0..k {
            let freq = (idx / 2 + 1) as f64;
            let mut p: Vec<f64> = s
                .iter()
                .map(|&sb| {
                    let theta = 2.0 * std::f64::consts::PI * sb / 4.0;
                    if idx % 2 == 0 {
                        (freq * theta).cos()
                    } else {
                        (freq * theta).sin()
                    }
                })
                .collect();
            let raw = dot(&p, &p).sqrt();
            for _ in 0..2 {
                let ones = vec![1.0; p.len()];
                let mean = dot(&p, &ones) / total;
                p.iter_mut().for_each(|x| *x -= mean);
                for q in &patterns {
                    let c = dot(&p, q);
                    p.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let norm = dot(&p, &p).sqrt();
            if !(norm > 1e-8 * raw.max(1e-300)) {
                return Err(too_many());
            }
            p.iter_mut().for_each(|x| *x /= norm);
            patterns.push(p);
        }
        Ok(Self {
            m,
            patterns,
            weights,
            id: format!("trig-k{k}-m{m}"),
        })
    }

    pub fn k(&self) -> usize {
        self.patterns.len()
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).zip(&self.weights).map(|((x, y), w)| w * x * y).sum()
    }

    /// Weighted mean `Σ w_b g_b / Σ w_b` of each pattern.
    pub fn means(&self) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        self.patterns
            .iter()
            .map(|p| p.iter().zip(&self.weights).map(|(x, w)| w * x).sum::<f64>() / total)
            .collect()
    }

    /// Gram matrix, row-major `K × K`.
    pub fn gram(&self) -> Vec<f64> {
        let k = self.k();
        let mut g = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                g[i * k + j] = self.inner(&self.patterns[i], &self.patterns[j]);
            }
        }
        g
    }
}
