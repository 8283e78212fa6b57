//! Per-column standardization.

use serde::{Deserialize, Serialize};

/// Divisor floor for zero-variance columns.
pub const STD_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Population mean and standard deviation of each column.
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>, dim: usize) -> Self {
        let mut n = 0usize;
        let mut mean = vec![0.0; dim];
        let mut m2 = vec![0.0; dim];
        for row in rows {
            n += 1;
            for j in 0..dim {
                let d = row[j] - mean[j];
                mean[j] += d / n as f64;
                m2[j] += d * (row[j] - mean[j]);
            }
        }
        let std = m2.iter().map(|v| if n > 0 { (v / n as f64).sqrt() } else { 0.0 }).collect();
        Self { mean, std }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    #[inline]
    pub fn forward(&self, j: usize, v: f64) -> f64 {
        (v - self.mean[j]) / self.std[j].max(STD_GUARD)
    }

    #[inline]
    pub fn inverse(&self, j: usize, v: f64) -> f64 {
        v * self.std[j].max(STD_GUARD) + self.mean[j]
    }

    pub fn apply(&self, row: &mut [f64]) {
        for (j, v) in row.iter_mut().enumerate() {
            *v = self.forward(j, *v);
        }
    }
}
