use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Root mean square of the errors.
pub fn rmse(errors: &[f64]) -> Result<f64, EvalError> {
    if errors.is_empty() {
        return Err(EvalError::Empty);
    }
    if let Some(i) = errors.iter().position(|e| !e.is_finite()) {
        return Err(EvalError::NonFinite(i));
    }
    // Scale by the largest magnitude so squares cannot overflow.
    let scale = errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    let mean_sq = errors.iter().map(|e| (e / scale).powi(2)).sum::<f64>() / errors.len() as f64;
    Ok(scale * mean_sq.sqrt())
}

/// Planar error from the two per-axis RMSE values.
pub fn horizontal_error(rmse_x: f64, rmse_y: f64) -> f64 {
    rmse_x.hypot(rmse_y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub rmse_x: f64,
    pub rmse_y: f64,
    pub horizontal_error: f64,
    pub n: usize,
    /// Signed per-row errors (predicted − actual), when known.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors_x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors_y: Vec<f64>,
}

impl RegressionReport {
    pub fn from_errors(errors_x: Vec<f64>, errors_y: Vec<f64>) -> Result<RegressionReport, EvalError> {
        if errors_x.len() != errors_y.len() {
            return Err(EvalError::LengthMismatch {
                left: errors_x.len(),
                right: errors_y.len(),
            });
        }
        let rmse_x = rmse(&errors_x)?;
        let rmse_y = rmse(&errors_y)?;
        Ok(RegressionReport {
            rmse_x,
            rmse_y,
            horizontal_error: horizontal_error(rmse_x, rmse_y),
            n: errors_x.len(),
            errors_x,
            errors_y,
        })
    }

    /// Report from already-aggregated per-axis values.
    pub fn from_summary(rmse_x: f64, rmse_y: f64, n: usize) -> Result<RegressionReport, EvalError> {
        for (name, v) in [("rmse_x", rmse_x), ("rmse_y", rmse_y)] {
            if !v.is_finite() {
                return Err(EvalError::NonFinite(0));
            }
            if v < 0.0 {
                return Err(EvalError::Negative(format!("{name} = {v}")));
            }
        }
        Ok(RegressionReport {
            rmse_x,
            rmse_y,
            horizontal_error: horizontal_error(rmse_x, rmse_y),
            n,
            errors_x: Vec::new(),
            errors_y: Vec::new(),
        })
    }

    pub fn metric(&self, m: Metric) -> f64 {
        match m {
            Metric::RmseX => self.rmse_x,
            Metric::RmseY => self.rmse_y,
            Metric::Horizontal => self.horizontal_error,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    RmseX,
    RmseY,
    Horizontal,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::RmseX, Metric::RmseY, Metric::Horizontal];
}

/// Model names in ascending order of each metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub rmse_x: Vec<(String, f64)>,
    pub rmse_y: Vec<(String, f64)>,
    pub horizontal_error: Vec<(String, f64)>,
}

impl Ranking {
    pub fn by(&self, m: Metric) -> &[(String, f64)] {
        match m {
            Metric::RmseX => &self.rmse_x,
            Metric::RmseY => &self.rmse_y,
            Metric::Horizontal => &self.horizontal_error,
        }
    }

    pub fn names(&self, m: Metric) -> Vec<&str> {
        self.by(m).iter().map(|(n, _)| n.as_str()).collect()
    }

    /// Best model and its value for the metric.
    pub fn minimum(&self, m: Metric) -> Option<(&str, f64)> {
        self.by(m).first().map(|(n, v)| (n.as_str(), *v))
    }
}

/// Ties keep the alphabetical order of the map keys.
pub fn rank_models(reports: &BTreeMap<String, RegressionReport>) -> Ranking {
    let order = |m: Metric| {
        let mut v: Vec<(String, f64)> = reports.iter().map(|(k, r)| (k.clone(), r.metric(m))).collect();
        v.sort_by(|a, b| a.1.total_cmp(&b.1));
        v
    };
    Ranking {
        rmse_x: order(Metric::RmseX),
        rmse_y: order(Metric::RmseY),
        horizontal_error: order(Metric::Horizontal),
    }
}
