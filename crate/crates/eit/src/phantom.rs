//! Synthetic conductivities from a JSON description, and synthetic noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::EitError;
use crate::field::{check_bounds, ConductivityField};
use crate::ntd::{matrix_norm, Metric, NtdMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    /// `params = [x0, y0, x1, y1]`
    Rectangle,
    /// `params = [cx, cy, r]`
    Disk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inclusion {
    pub shape: Shape,
    pub params: Vec<f64>,
    pub value: f64,
}

impl Inclusion {
    /// Whether the point `(x, y)` of the unit square lies inside.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let p = &self.params;
        match self.shape {
            Shape::Rectangle => x >= p[0] && x <= p[2] && y >= p[1] && y <= p[3],
            Shape::Disk => (x - p[0]).powi(2) + (y - p[1]).powi(2) <= p[2] * p[2],
        }
    }
}

/// `{"background": 1.0, "bounds": [0.5, 2.5], "inclusions": [{"shape": "disk", "params": [0.5, 0.5, 0.2], "value": 2.0}]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub background: f64,
    pub bounds: [f64; 2],
    #[serde(default)]
    pub inclusions: Vec<Inclusion>,
}

impl PhantomSpec {
    pub fn from_json(text: &str) -> Result<Self, EitError> {
        serde_json::from_str(text).map_err(|e| EitError::Phantom(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), EitError> {
        let [a, b] = self.bounds;
        check_bounds(a, b)?;
        let inside = |v: f64| v >= a && v <= b;
        if !inside(self.background) {
            return Err(EitError::Phantom(format!(
                "background {} outside [{a}, {b}]",
                self.background
            )));
        }
        for (idx, inc) in self.inclusions.iter().enumerate() {
            let want = match inc.shape {
                Shape::Rectangle => 4,
                Shape::Disk => 3,
            };
            if inc.params.len() != want || inc.params.iter().any(|p| !p.is_finite()) {
                return Err(EitError::Phantom(format!(
                    "inclusion {idx}: {:?} needs {want} finite params, got {:?}",
                    inc.shape, inc.params
                )));
            }
            if !inside(inc.value) {
                return Err(EitError::Phantom(format!(
                    "inclusion {idx}: value {} outside [{a}, {b}]",
                    inc.value
                )));
            }
        }
        Ok(())
    }

    /// Background 1 with a centered square inclusion of value 2 covering
    /// the middle `6/16` of each side; bounds `[0.5, 2.5]`.
    pub fn centered_inclusion() -> Self {
        Self {
            background: 1.0,
            bounds: [0.5, 2.5],
            inclusions: vec![Inclusion {
                shape: Shape::Rectangle,
                params: vec![5.0 / 16.0, 5.0 / 16.0, 11.0 / 16.0, 11.0 / 16.0],
                value: 2.0,
            }],
        }
    }
}

/// Rasterizes a phantom on `M × M` cells by cell centers; later inclusions
/// overwrite earlier ones.
pub fn make_phantom(spec: &PhantomSpec, m: usize) -> Result<ConductivityField, EitError> {
    spec.validate()?;
    if m == 0 {
        return Err(EitError::EmptyMesh);
    }
    let h = 1.0 / m as f64;
    let mut values = vec![spec.background; m * m];
    for j in 0..m {
        for i in 0..m {
            let (x, y) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            for inc in &spec.inclusions {
                if inc.contains(x, y) {
                    values[j * m + i] = inc.value;
                }
            }
        }
    }
    ConductivityField::new(m, values, spec.bounds[0], spec.bounds[1])
}

/// Adds a seeded symmetric perturbation whose `metric` norm is exactly `eta`.
pub fn add_noise(n: &NtdMatrix, eta: f64, seed: u64, metric: Metric) -> Result<NtdMatrix, EitError> {
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(EitError::Noise(eta));
    }
    if eta == 0.0 {
        return Ok(n.clone());
    }
    let k = n.k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e = vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            let v: f64 = rng.gen_range(-1.0..1.0);
            e[i * k + j] = v;
            e[j * k + i] = v;
        }
    }
    let scale = eta / matrix_norm(&e, k, metric);
    Ok(NtdMatrix {
        data: n.data.iter().zip(&e).map(|(a, b)| a + scale * b).collect(),
        ..n.clone()
    })
}
