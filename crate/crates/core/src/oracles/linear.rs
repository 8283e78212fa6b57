//! Continuous-approximation estimators fitted by least squares.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::Aggregates;

/// `β √(A R) + 2Δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bhhd {
    pub beta: f64,
}

impl Bhhd {
    pub fn predict(&self, a: &Aggregates) -> f64 {
        self.beta * a.bhh() + 2.0 * a.delta
    }
}

/// `β₁ √(A R) + β₂ Δ + β₃ √(A / R) + β₄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fig {
    pub beta: [f64; 4],
}

impl Fig {
    pub fn regressors(a: &Aggregates) -> [f64; 4] {
        [a.bhh(), a.delta, (a.area / a.requests).sqrt(), 1.0]
    }

    pub fn predict(&self, a: &Aggregates) -> f64 {
        Self::regressors(a).iter().zip(&self.beta).map(|(x, b)| x * b).sum()
    }
}

/// Closed-form one-parameter least squares.
pub fn fit_bhhd(samples: &[(Aggregates, f64)]) -> Result<Bhhd> {
    if samples.is_empty() {
        return Err(Error::Empty("calibration set"));
    }
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, y) in samples {
        let x = a.bhh();
        sxy += x * (y - 2.0 * a.delta);
        sxx += x * x;
    }
    if sxx <= 0.0 {
        return Err(Error::Degenerate("every √(A R) regressor is zero".into()));
    }
    Ok(Bhhd { beta: sxy / sxx })
}

/// Ridge term added when the normal equations are rank deficient.
pub const RIDGE: f64 = 1e-8;

/// Ordinary least squares over the four regressors through column-scaled
/// normal equations, with a ridge retry on rank deficiency.
pub fn fit_fig(samples: &[(Aggregates, f64)]) -> Result<Fig> {
    if samples.len() < 4 {
        return Err(Error::validation(
            "calibration set",
            format!("need at least 4 records, got {}", samples.len()),
        ));
    }
    let rows: Vec<[f64; 4]> = samples.iter().map(|(a, _)| Fig::regressors(a)).collect();
    let mut scale = [0.0f64; 4];
    for r in &rows {
        for j in 0..4 {
            scale[j] += r[j] * r[j];
        }
    }
    for s in &mut scale {
        *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
    }
    let mut ata = [[0.0f64; 4]; 4];
    let mut aty = [0.0f64; 4];
    for (r, (_, y)) in rows.iter().zip(samples) {
        let z: [f64; 4] = std::array::from_fn(|j| r[j] / scale[j]);
        for i in 0..4 {
            aty[i] += z[i] * y;
            for j in 0..4 {
                ata[i][j] += z[i] * z[j];
            }
        }
    }
    if ata.iter().flatten().chain(&aty).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("FIG normal equations".into()));
    }
    let solved = cholesky_solve(&ata, &aty).or_else(|| {
        let mut ridged = ata;
        for (i, row) in ridged.iter_mut().enumerate() {
            row[i] += RIDGE;
        }
        cholesky_solve(&ridged, &aty)
    });
    let z = solved.ok_or_else(|| Error::Degenerate("FIG design matrix singular even with ridge".into()))?;
    Ok(Fig {
        beta: std::array::from_fn(|j| z[j] / scale[j]),
    })
}

/// Solve `m x = b` for symmetric positive definite `m`; `None` when a pivot
/// is not clearly positive.
fn cholesky_solve<const N: usize>(m: &[[f64; N]; N], b: &[f64; N]) -> Option<[f64; N]> {
    let tol = 1e-12 * (0..N).map(|i| m[i][i]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut l = [[0.0f64; N]; N];
    for i in 0..N {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = m[i][i] - s;
                if d <= tol {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (m[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = [0.0f64; N];
    for i in 0..N {
        y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = [0.0f64; N];
    for i in (0..N).rev() {
        x[i] = (y[i] - (i + 1..N).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    Some(x)
}

/// Mean squared error of `predict` over `samples`.
pub fn mse(samples: &[(Aggregates, f64)], predict: impl Fn(&Aggregates) -> f64) -> f64 {
    samples.iter().map(|(a, y)| (predict(a) - y).powi(2)).sum::<f64>() / samples.len() as f64
}
