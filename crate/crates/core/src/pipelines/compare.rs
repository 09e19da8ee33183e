use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_coords, PipelineConfig, PipelineError};
use crate::data::{split_dataset_indices, BeaconDistanceSample, Dataset, SplitConfig};
use crate::evaluation::{rank_models, ComparisonRow, ComparisonTable, Ranking, RegressionReport};
use crate::learners::{Family, LearnerSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub train_ratio: f64,
    pub seeds: Vec<u64>,
    /// One spec per family; the per-run seed replaces the spec's own seed.
    pub specs: Vec<LearnerSpec>,
}

impl CompareConfig {
    /// All eight family presets on an unstratified 70/30 split.
    pub fn new(seeds: Vec<u64>) -> CompareConfig {
        CompareConfig {
            train_ratio: 0.7,
            seeds,
            specs: Family::ALL.iter().map(|&f| LearnerSpec::preset(f)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum CellOutcome {
    Ok {
        rmse_x: f64,
        rmse_y: f64,
        horizontal_error: f64,
    },
    Failed {
        reason: String,
    },
}

impl CellOutcome {
    pub fn metrics(&self) -> Option<[f64; 3]> {
        match self {
            CellOutcome::Ok {
                rmse_x,
                rmse_y,
                horizontal_error,
            } => Some([*rmse_x, *rmse_y, *horizontal_error]),
            CellOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    /// Shared by every family for this seed.
    pub test_rows: Vec<usize>,
    pub cells: BTreeMap<Family, CellOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub per_seed: Vec<SeedRun>,
    /// Per-metric median over the seeds where the family trained.
    pub aggregate: BTreeMap<Family, Option<[f64; 3]>>,
    pub failures: BTreeMap<Family, usize>,
    pub table: ComparisonTable,
    /// Over families with an aggregate, keyed by display name.
    pub ranking: Ranking,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs every spec on every seed. A family that fails to train gets a failed
/// cell for that seed; the comparison carries on.
pub fn compare_models(dataset: &Dataset<BeaconDistanceSample>, config: &CompareConfig) -> Result<Comparison, PipelineError> {
    if config.seeds.is_empty() {
        return Err(PipelineError::Data(crate::data::DataError::InvalidParameter(
            "at least one seed is required".into(),
        )));
    }
    let mut test_rows = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let split = split_dataset_indices(dataset, &SplitConfig::new(config.train_ratio, seed, false))?;
        if split.test.is_empty() {
            return Err(PipelineError::EmptyTestSet(config.train_ratio));
        }
        test_rows.push(split.test);
    }
    let jobs: Vec<(usize, &LearnerSpec)> = (0..config.seeds.len())
        .flat_map(|s| config.specs.iter().map(move |spec| (s, spec)))
        .collect();
    let outcomes: Vec<(usize, Family, CellOutcome)> = jobs
        .into_par_iter()
        .map(|(s, spec)| {
            let seed = config.seeds[s];
            let cfg = PipelineConfig {
                split: SplitConfig::new(config.train_ratio, seed, false),
                learner: spec.clone().with_seed(seed),
                window: None,
            };
            let cell = match run_coords(dataset, &cfg) {
                Ok(run) => CellOutcome::Ok {
                    rmse_x: run.report.rmse_x,
                    rmse_y: run.report.rmse_y,
                    horizontal_error: run.report.horizontal_error,
                },
                Err(e) => CellOutcome::Failed { reason: e.to_string() },
            };
            (s, spec.family, cell)
        })
        .collect();

    let mut per_seed: Vec<SeedRun> = config
        .seeds
        .iter()
        .zip(test_rows)
        .map(|(&seed, test_rows)| SeedRun {
            seed,
            test_rows,
            cells: BTreeMap::new(),
        })
        .collect();
    for (s, family, cell) in outcomes {
        per_seed[s].cells.insert(family, cell);
    }

    let mut aggregate = BTreeMap::new();
    let mut failures = BTreeMap::new();
    let mut table = ComparisonTable::default();
    let mut reports = BTreeMap::new();
    for spec in &config.specs {
        let family = spec.family;
        let ok: Vec<[f64; 3]> = per_seed.iter().filter_map(|r| r.cells[&family].metrics()).collect();
        failures.insert(family, per_seed.len() - ok.len());
        let agg = (!ok.is_empty()).then(|| [0, 1, 2].map(|m| median(ok.iter().map(|v| v[m]).collect())));
        if let Some([x, y, h]) = agg {
            reports.insert(
                family.display_name().to_string(),
                RegressionReport {
                    rmse_x: x,
                    rmse_y: y,
                    horizontal_error: h,
                    n: ok.len(),
                    errors_x: Vec::new(),
                    errors_y: Vec::new(),
                },
            );
        }
        aggregate.insert(family, agg);
        table.rows.push(ComparisonRow {
            name: family.display_name().to_string(),
            metrics: agg,
        });
    }
    Ok(Comparison {
        per_seed,
        aggregate,
        failures,
        table,
        ranking: rank_models(&reports),
    })
}
