//! Localization error metrics, confusion-matrix statistics and model ranking.

mod confusion;
mod regression;
mod table;

pub use confusion::{classification_report, confusion_matrix, ClassificationReport, ConfusionMatrix};
pub use regression::{horizontal_error, rank_models, rmse, Metric, Ranking, RegressionReport};
pub use table::{format_cm, ComparisonRow, ComparisonTable, TABLE_HEADERS};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no samples to evaluate")]
    Empty,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("negative value: {0}")]
    Negative(String),
}
