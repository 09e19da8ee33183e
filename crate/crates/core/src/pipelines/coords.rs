use serde::{Deserialize, Serialize};

use super::{PipelineConfig, PipelineError};
use crate::data::{split_dataset_indices, BeaconDistanceSample, Dataset};
use crate::evaluation::RegressionReport;
use crate::learners::{FeatureImportance, FeatureMatrix, FittedModel, LearnerSpec, Targets};

pub const COORD_FEATURE_NAMES: [&str; 3] = ["Distance A", "Distance B", "Distance C"];

pub fn beacon_features(dataset: &Dataset<BeaconDistanceSample>) -> FeatureMatrix {
    let values = dataset.rows.iter().flat_map(|r| r.distances()).collect();
    FeatureMatrix::new(values, 3, COORD_FEATURE_NAMES.iter().map(|s| s.to_string()).collect())
        .expect("validated distances are finite")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordPredictionRow {
    pub row: usize,
    pub actual: f64,
    pub predicted: f64,
    pub distance_a: f64,
    pub distance_b: f64,
    pub distance_c: f64,
    pub time: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordsRun {
    pub report: RegressionReport,
    pub predictions_x: Vec<CoordPredictionRow>,
    pub predictions_y: Vec<CoordPredictionRow>,
    /// Present for forest learners.
    pub importance_x: Option<FeatureImportance>,
    pub importance_y: Option<FeatureImportance>,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

fn fit_axis(
    spec: &LearnerSpec,
    x: &FeatureMatrix,
    train_rows: &[usize],
    target: impl Fn(&BeaconDistanceSample) -> f64,
    rows: &[BeaconDistanceSample],
) -> Result<FittedModel, PipelineError> {
    let y: Vec<f64> = train_rows.iter().map(|&i| target(&rows[i])).collect();
    Ok(spec.fit(&x.select_rows(train_rows), Targets::Values(&y))?)
}

fn prediction_rows(
    model: &FittedModel,
    x: &FeatureMatrix,
    test_rows: &[usize],
    rows: &[BeaconDistanceSample],
    target: impl Fn(&BeaconDistanceSample) -> f64,
) -> Vec<CoordPredictionRow> {
    test_rows
        .iter()
        .map(|&i| {
            let r = &rows[i];
            CoordPredictionRow {
                row: i,
                actual: target(r),
                predicted: model.predict(x.row(i)).value().expect("regression model"),
                distance_a: r.distance_a,
                distance_b: r.distance_b,
                distance_c: r.distance_c,
                time: r.timestamp.clone(),
            }
        })
        .collect()
}

/// Two independent regressors on the three distances, one per coordinate.
pub fn run_coords(dataset: &Dataset<BeaconDistanceSample>, config: &PipelineConfig) -> Result<CoordsRun, PipelineError> {
    let split = split_dataset_indices(dataset, &config.split)?;
    if split.test.is_empty() {
        return Err(PipelineError::EmptyTestSet(config.split.train_ratio));
    }
    let x = beacon_features(dataset);
    let rows = &dataset.rows;
    let px = |r: &BeaconDistanceSample| r.position_x;
    let py = |r: &BeaconDistanceSample| r.position_y;
    let model_x = fit_axis(&config.learner, &x, &split.train, px, rows)?;
    let model_y = fit_axis(&config.learner, &x, &split.train, py, rows)?;
    let predictions_x = prediction_rows(&model_x, &x, &split.test, rows, px);
    let predictions_y = prediction_rows(&model_y, &x, &split.test, rows, py);
    let errors = |p: &[CoordPredictionRow]| p.iter().map(|r| r.predicted - r.actual).collect::<Vec<f64>>();
    let report = RegressionReport::from_errors(errors(&predictions_x), errors(&predictions_y))?;
    Ok(CoordsRun {
        report,
        predictions_x,
        predictions_y,
        importance_x: model_x.forest().map(|f| f.feature_importance()),
        importance_y: model_y.forest().map(|f| f.feature_importance()),
        train_rows: split.train,
        test_rows: split.test,
    })
}
