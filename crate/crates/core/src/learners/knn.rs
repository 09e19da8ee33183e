//! Brute-force k-nearest-neighbour classification and regression.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{
    check_targets, check_training, FeatureMatrix, LearnerError, Prediction,
    PredictionWithConfidence, Targets,
};
use crate::data::Zone;

#[derive(Debug, Clone, Serialize, Deserialize)]
enum StoredTargets {
    Classes(Vec<Zone>),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnModel {
    train: FeatureMatrix,
    targets: StoredTargets,
    k: usize,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Stores the training set. Features are expected to be standardized.
pub fn fit_knn(x: &FeatureMatrix, targets: Targets<'_>, k: usize) -> Result<KnnModel, LearnerError> {
    check_training(x, targets.len())?;
    check_targets(&targets)?;
    if k == 0 {
        return Err(LearnerError::InvalidParameter("k must be >= 1".into()));
    }
    if k > x.n_rows() {
        return Err(LearnerError::KTooLarge { k, n: x.n_rows() });
    }
    let targets = match targets {
        Targets::Classes(c) => StoredTargets::Classes(c.to_vec()),
        Targets::Values(v) => StoredTargets::Values(v.to_vec()),
    };
    Ok(KnnModel {
        train: x.clone(),
        targets,
        k,
    })
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Indices of the k nearest training rows by Euclidean distance, nearest
    /// first; equal distances go to the lower row index.
    pub fn neighbors(&self, query: &[f64]) -> Vec<usize> {
        let mut scored: Vec<(f64, usize)> = (0..self.train.n_rows())
            .map(|i| (squared_distance(self.train.row(i), query), i))
            .collect();
        let order = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
        };
        if self.k < scored.len() {
            scored.select_nth_unstable_by(self.k - 1, order);
            scored.truncate(self.k);
        }
        scored.sort_unstable_by(order);
        scored.into_iter().map(|(_, i)| i).collect()
    }

    pub fn predict(&self, query: &[f64]) -> Prediction {
        let nn = self.neighbors(query);
        match &self.targets {
            StoredTargets::Classes(labels) => {
                let mut votes = [0usize; Zone::COUNT];
                for &i in &nn {
                    votes[labels[i].index()] += 1;
                }
                Prediction::Class(PredictionWithConfidence::from_votes(votes))
            }
            StoredTargets::Values(values) => {
                Prediction::Value(nn.iter().map(|&i| values[i]).sum::<f64>() / nn.len() as f64)
            }
        }
    }
}
