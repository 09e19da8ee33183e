//! Ordinary least squares through the normal equations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_targets, check_training, FeatureMatrix, LearnerError, Targets};

/// Diagonal jitter added to the normal matrix.
pub const RIDGE_JITTER: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

/// Fits on mean-centered columns, then recovers the intercept from the means.
pub fn fit_ols(x: &FeatureMatrix, y: &[f64]) -> Result<LinearModel, LearnerError> {
    check_training(x, y.len())?;
    check_targets(&Targets::Values(y))?;
    let (n, p) = (x.n_rows(), x.n_cols());
    if n < p + 1 {
        return Err(LearnerError::InsufficientData {
            needed: p + 1,
            got: n,
        });
    }
    let means: Vec<f64> = (0..p).map(|j| x.column(j).sum::<f64>() / n as f64).collect();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let a = DMatrix::from_fn(n, p, |i, j| x.get(i, j) - means[j]);
    let b = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    let mut normal = a.transpose() * &a;
    for j in 0..p {
        normal[(j, j)] += RIDGE_JITTER;
    }
    let rhs = a.transpose() * b;
    let chol = normal.cholesky().ok_or(LearnerError::Singular)?;
    let beta = chol.solve(&rhs);
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(LearnerError::Singular);
    }
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let intercept = y_mean - coefficients.iter().zip(&means).map(|(c, m)| c * m).sum::<f64>();
    Ok(LinearModel {
        coefficients,
        intercept,
    })
}

impl LinearModel {
    pub fn predict(&self, query: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(query)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }
}
