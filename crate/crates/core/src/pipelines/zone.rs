use serde::{Deserialize, Serialize};

use super::{PipelineConfig, PipelineError};
use crate::data::{split_dataset_indices, Dataset, ImuSample, PerZone, RssiSample, Zone, RSSI_OUT_OF_RANGE};
use crate::evaluation::{classification_report, confusion_matrix, ClassificationReport};
use crate::learners::{FeatureMatrix, Targets};

/// Zone whose scanner reads strongest above the out-of-range sentinel.
pub fn zone_from_rssi_rule(sample: &RssiSample) -> Option<Zone> {
    let mut best: Option<(Zone, f64)> = None;
    for (zone, v) in sample.readings.iter() {
        if v > RSSI_OUT_OF_RANGE && best.is_none_or(|(_, b)| v > b) {
            best = Some((zone, v));
        }
    }
    best.map(|(z, _)| z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonePredictionRow {
    /// Zero-based row in the source dataset.
    pub row: usize,
    pub actual: Zone,
    pub predicted: Zone,
    pub confidence: PerZone<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneRun {
    pub report: ClassificationReport,
    pub predictions: Vec<ZonePredictionRow>,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

pub fn rssi_features(dataset: &Dataset<RssiSample>) -> FeatureMatrix {
    let names: Vec<String> = Zone::ALL.iter().map(|z| format!("rssi_{z}")).collect();
    let values = dataset.rows.iter().flat_map(|r| r.readings.0).collect();
    FeatureMatrix::new(values, Zone::COUNT, names).expect("validated readings are finite")
}

const IMU_CHANNELS: [&str; 6] = ["acc_x", "acc_y", "acc_z", "gyro_x", "gyro_y", "gyro_z"];

/// Raw channels, or with `window = Some(w)` the mean and population std of
/// each channel over the trailing `w` rows in source order (fewer at the
/// start of the file).
pub fn imu_features(dataset: &Dataset<ImuSample>, window: Option<usize>) -> Result<FeatureMatrix, PipelineError> {
    let channels: Vec<[f64; 6]> = dataset.rows.iter().map(ImuSample::channels).collect();
    match window {
        None => {
            let names = IMU_CHANNELS.iter().map(|s| s.to_string()).collect();
            let values = channels.iter().flatten().copied().collect();
            Ok(FeatureMatrix::new(values, 6, names)?)
        }
        Some(0) => Err(PipelineError::InvalidWindow(0)),
        Some(w) => {
            let names = IMU_CHANNELS
                .iter()
                .map(|c| format!("{c}_mean"))
                .chain(IMU_CHANNELS.iter().map(|c| format!("{c}_std")))
                .collect();
            let mut values = Vec::with_capacity(channels.len() * 12);
            for i in 0..channels.len() {
                let span = &channels[i.saturating_sub(w - 1)..=i];
                let n = span.len() as f64;
                let means: Vec<f64> = (0..6).map(|c| span.iter().map(|r| r[c]).sum::<f64>() / n).collect();
                values.extend_from_slice(&means);
                for (c, mean) in means.iter().enumerate() {
                    let var = span.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n;
                    values.push(var.sqrt());
                }
            }
            Ok(FeatureMatrix::new(values, 12, names)?)
        }
    }
}

fn run_classification(
    x: &FeatureMatrix,
    labels: &[Zone],
    train_rows: Vec<usize>,
    test_rows: Vec<usize>,
    config: &PipelineConfig,
) -> Result<ZoneRun, PipelineError> {
    if test_rows.is_empty() {
        return Err(PipelineError::EmptyTestSet(config.split.train_ratio));
    }
    let train_x = x.select_rows(&train_rows);
    let train_y: Vec<Zone> = train_rows.iter().map(|&i| labels[i]).collect();
    let model = config.learner.fit(&train_x, Targets::Classes(&train_y))?;
    let predictions: Vec<ZonePredictionRow> = test_rows
        .iter()
        .map(|&i| {
            let p = model.predict(x.row(i));
            let c = p.class().expect("classification model").clone();
            ZonePredictionRow {
                row: i,
                actual: labels[i],
                predicted: c.label,
                confidence: c.confidence,
            }
        })
        .collect();
    let truth: Vec<Zone> = predictions.iter().map(|r| r.actual).collect();
    let predicted: Vec<Zone> = predictions.iter().map(|r| r.predicted).collect();
    let report = classification_report(&confusion_matrix(&truth, &predicted)?)?;
    Ok(ZoneRun {
        report,
        predictions,
        train_rows,
        test_rows,
    })
}

/// k-NN on the four standardized scanner readings by default.
pub fn run_zone_rssi(dataset: &Dataset<RssiSample>, config: &PipelineConfig) -> Result<ZoneRun, PipelineError> {
    let split = split_dataset_indices(dataset, &config.split)?;
    run_classification(&rssi_features(dataset), &dataset.labels(), split.train, split.test, config)
}

/// Random forest on the six IMU channels by default. Activity tags are
/// never used as features.
pub fn run_zone_imu(dataset: &Dataset<ImuSample>, config: &PipelineConfig) -> Result<ZoneRun, PipelineError> {
    let split = split_dataset_indices(dataset, &config.split)?;
    let x = imu_features(dataset, config.window)?;
    run_classification(&x, &dataset.labels(), split.train, split.test, config)
}
