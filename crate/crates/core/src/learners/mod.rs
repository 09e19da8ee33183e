//! From-scratch learners behind one fit/predict contract.
//!
//! Classification targets are [`Zone`] labels and predictions carry a
//! per-zone confidence. Regression targets are one number per row; multi-output
//! problems (the X and Y coordinates) are fitted as independent models.

pub mod forest;
pub mod gbt;
pub mod knn;
pub mod linear;
pub mod mlp;
pub mod spec;
pub mod svr;
pub mod tree;

pub use forest::{fit_forest, FeatureImportance, ForestModel, ForestParams};
pub use gbt::{fit_gbt, GbtModel, GbtParams};
pub use knn::{fit_knn, KnnModel};
pub use linear::{fit_ols, LinearModel};
pub use mlp::{fit_mlp, Activation, MlpModel, MlpParams};
pub use spec::{Family, FittedModel, Hyperparameters, LearnerSpec};
pub use svr::{fit_svr, Kernel, SvrModel, SvrParams};
pub use tree::{eval_tree, fit_tree, LeafPayload, TreeNode, TreeParams};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{PerZone, Zone};

/// Tolerance on "confidences sum to one".
pub const CONFIDENCE_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("need at least {needed} training rows, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("k = {k} exceeds the {n} training rows")]
    KTooLarge { k: usize, n: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("normal equations are singular even after jitter")]
    Singular,
    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },
    #[error("{family} does not support {task}")]
    Unsupported { family: String, task: Task },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Regression,
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Task::Classification => "classification",
            Task::Regression => "regression",
        })
    }
}

/// Training targets for either task.
#[derive(Debug, Clone, Copy)]
pub enum Targets<'a> {
    Classes(&'a [Zone]),
    Values(&'a [f64]),
}

impl Targets<'_> {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes(c) => c.len(),
            Targets::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn task(&self) -> Task {
        match self {
            Targets::Classes(_) => Task::Classification,
            Targets::Values(_) => Task::Regression,
        }
    }
}

/// Output of a fitted model for one query row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Prediction {
    Value(f64),
    Class(PredictionWithConfidence),
}

impl Prediction {
    pub fn value(&self) -> Option<f64> {
        match self {
            Prediction::Value(v) => Some(*v),
            Prediction::Class(_) => None,
        }
    }

    pub fn class(&self) -> Option<&PredictionWithConfidence> {
        match self {
            Prediction::Class(c) => Some(c),
            Prediction::Value(_) => None,
        }
    }
}

/// Zone label with the per-zone confidences it was chosen from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionWithConfidence {
    pub label: Zone,
    pub confidence: PerZone<f64>,
}

impl PredictionWithConfidence {
    /// Normalizes non-negative scores into confidences; the label is the
    /// first zone (in zone order) holding the maximum.
    pub fn from_scores(scores: [f64; Zone::COUNT]) -> Self {
        let total: f64 = scores.iter().sum();
        let confidence = if total > 0.0 {
            PerZone(scores.map(|s| s / total))
        } else {
            PerZone::splat(1.0 / Zone::COUNT as f64)
        };
        PredictionWithConfidence {
            label: argmax_zone(&confidence.0),
            confidence,
        }
    }

    pub fn from_votes(votes: [usize; Zone::COUNT]) -> Self {
        Self::from_scores(votes.map(|v| v as f64))
    }
}

/// First index of the maximum, so ties go to the earlier zone.
pub(crate) fn argmax_zone(values: &[f64; Zone::COUNT]) -> Zone {
    let mut best = 0;
    for i in 1..Zone::COUNT {
        if values[i] > values[best] {
            best = i;
        }
    }
    Zone::ALL[best]
}

/// Dense row-major matrix of finite features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(values: Vec<f64>, cols: usize, names: Vec<String>) -> Result<Self, LearnerError> {
        if cols == 0 {
            return Err(LearnerError::DimensionMismatch("zero columns".into()));
        }
        if !values.len().is_multiple_of(cols) {
            return Err(LearnerError::DimensionMismatch(format!(
                "{} values do not fill rows of {cols}",
                values.len()
            )));
        }
        if names.len() != cols {
            return Err(LearnerError::DimensionMismatch(format!(
                "{} names for {cols} columns",
                names.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LearnerError::NonFinite("feature matrix".into()));
        }
        Ok(FeatureMatrix {
            rows: values.len() / cols,
            cols,
            values,
            names,
        })
    }

    /// Builds a matrix from equally sized rows; columns are named `f0..`.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LearnerError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != cols) {
            return Err(LearnerError::DimensionMismatch("ragged rows".into()));
        }
        let names = (0..cols).map(|j| format!("f{j}")).collect();
        let values = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(values, cols, names)
    }

    pub fn with_names(mut self, names: &[&str]) -> Result<Self, LearnerError> {
        if names.len() != self.cols {
            return Err(LearnerError::DimensionMismatch(format!(
                "{} names for {} columns",
                names.len(),
                self.cols
            )));
        }
        self.names = names.iter().map(|s| s.to_string()).collect();
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |i| self.get(i, j))
    }

    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        let values = indices.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        FeatureMatrix {
            rows: indices.len(),
            cols: self.cols,
            values,
            names: self.names.clone(),
        }
    }
}

/// Per-column mean and population standard deviation of training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(train: &FeatureMatrix) -> Standardizer {
        let n = train.n_rows().max(1) as f64;
        let (means, stds) = (0..train.n_cols())
            .map(|j| {
                let mean = train.column(j).sum::<f64>() / n;
                let var = train.column(j).map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                (mean, var.sqrt())
            })
            .unzip();
        Standardizer { means, stds }
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(&v, (&m, &s))| if s > 0.0 { (v - m) / s } else { v })
            .collect()
    }

    pub fn transform(&self, x: &FeatureMatrix) -> FeatureMatrix {
        let values = (0..x.n_rows()).flat_map(|i| self.transform_row(x.row(i))).collect();
        FeatureMatrix {
            rows: x.rows,
            cols: x.cols,
            values,
            names: x.names.clone(),
        }
    }
}

pub fn standardize(train: &FeatureMatrix) -> (Standardizer, FeatureMatrix) {
    let stats = Standardizer::fit(train);
    let transformed = stats.transform(train);
    (stats, transformed)
}

/// Seed for sub-model `index` of an ensemble trained from `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the combined input
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_training(x: &FeatureMatrix, targets_len: usize) -> Result<(), LearnerError> {
    if x.n_rows() == 0 {
        return Err(LearnerError::EmptyTrainingSet);
    }
    if x.n_rows() != targets_len {
        return Err(LearnerError::DimensionMismatch(format!(
            "{} rows but {targets_len} targets",
            x.n_rows()
        )));
    }
    Ok(())
}

fn check_targets(targets: &Targets<'_>) -> Result<(), LearnerError> {
    if let Targets::Values(v) = targets {
        if v.iter().any(|t| !t.is_finite()) {
            return Err(LearnerError::NonFinite("targets".into()));
        }
    }
    Ok(())
}
