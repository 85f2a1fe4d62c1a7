//! Scalar images on a uniform pixel lattice.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("image dimensions must be positive (got {width}x{height})")]
    EmptyShape { width: usize, height: usize },
    #[error("expected {expected} pixel values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("pixel {index} is not finite")]
    NonFinite { index: usize },
    #[error("spacing must be positive and finite (got {0})")]
    Spacing(f64),
    #[error("shape mismatch: {0}x{1} vs {2}x{3}")]
    Mismatch(usize, usize, usize, usize),
}

/// Row-major image with pixel spacing `h`; pixel `(x, y)` is `data[y * width + x]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageGrid {
    pub width: usize,
    pub height: usize,
    pub h: f64,
    pub data: Vec<f64>,
}

impl ImageGrid {
    pub fn new(width: usize, height: usize, h: f64, data: Vec<f64>) -> Result<Self, GridError> {
        if width == 0 || height == 0 {
            return Err(GridError::EmptyShape { width, height });
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(GridError::Spacing(h));
        }
        if data.len() != width * height {
            return Err(GridError::Length {
                expected: width * height,
                got: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite { index });
        }
        Ok(Self {
            width,
            height,
            h,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, h: f64, value: f64) -> Self {
        Self::new(width, height, h, vec![value; width * height]).expect("valid constant image")
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            h: self.h,
            data: vec![0.0; self.data.len()],
        }
    }

    pub fn from_fn<F: Fn(usize, usize) -> f64>(width: usize, height: usize, h: f64, f: F) -> Self {
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(width, height, h, data).expect("valid generated image")
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn check_shape(&self, other: &Self) -> Result<(), GridError> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(GridError::Mismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ))
        }
    }

    /// Cell area `h²`.
    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    pub fn area(&self) -> f64 {
        self.cell_area() * self.len() as f64
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    pub fn zip_map<F: Fn(f64, f64) -> f64>(&self, other: &Self, f: F) -> Self {
        assert!(self.same_shape(other), "image shapes differ");
        Self {
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
            ..self.clone()
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    /// `h² Σ u v`
    pub fn dot(&self, other: &Self) -> f64 {
        self.cell_area() * self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum::<f64>()
    }

    /// `(h² Σ u²)^{1/2}`
    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.cell_area() * self.data.iter().map(|v| v * v).sum::<f64>()
    }

    /// `h² Σ |u|`
    pub fn l1_norm(&self) -> f64 {
        self.cell_area() * self.data.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
