//! End-to-end runs: ingest, split, fit, predict, evaluate.

mod compare;
mod coords;
mod output;
mod zone;

pub use compare::{compare_models, CellOutcome, CompareConfig, Comparison, SeedRun};
pub use coords::{beacon_features, run_coords, CoordPredictionRow, CoordsRun, COORD_FEATURE_NAMES};
pub use output::{coord_predictions_csv, zone_predictions_csv};
pub use zone::{
    imu_features, rssi_features, run_zone_imu, run_zone_rssi, zone_from_rssi_rule, ZonePredictionRow, ZoneRun,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, SplitConfig};
use crate::evaluation::EvalError;
use crate::learners::{Family, LearnerError, LearnerSpec};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("empty test set: train ratio {0} leaves no rows to evaluate")]
    EmptyTestSet(f64),
    #[error("invalid window length {0}")]
    InvalidWindow(usize),
}

impl PipelineError {
    pub fn is_divergence(&self) -> bool {
        matches!(self, PipelineError::Learner(LearnerError::Diverged { .. }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub split: SplitConfig,
    pub learner: LearnerSpec,
    /// Trailing IMU window (mean and std per channel); `None` uses raw rows.
    pub window: Option<usize>,
}

impl PipelineConfig {
    /// Stratified 80/20 split, k-NN.
    pub fn zone_rssi(seed: u64) -> PipelineConfig {
        PipelineConfig {
            split: SplitConfig::new(0.8, seed, true),
            learner: LearnerSpec::preset(Family::Knn).with_seed(seed),
            window: None,
        }
    }

    /// Stratified 70/30 split, random forest classifier.
    pub fn zone_imu(seed: u64) -> PipelineConfig {
        PipelineConfig {
            split: SplitConfig::new(0.7, seed, true),
            learner: LearnerSpec::preset(Family::RandomForest).with_seed(seed),
            window: None,
        }
    }

    /// Unstratified 70/30 split, random forest regressors (100 trees, depth 10).
    pub fn coords(seed: u64) -> PipelineConfig {
        PipelineConfig {
            split: SplitConfig::new(0.7, seed, false),
            learner: LearnerSpec::preset(Family::RandomForest).with_seed(seed),
            window: None,
        }
    }
}
