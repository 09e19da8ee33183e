//! Bagged random forests over [`TreeNode`]s.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::fit_tree_on_rows;
use super::{
    check_targets, check_training, derive_seed, eval_tree, FeatureMatrix, LearnerError,
    Prediction, PredictionWithConfidence, Targets, Task, TreeNode, TreeParams,
};
use crate::data::Zone;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features drawn per split; `None` picks ⌈√p⌉ for classification and
    /// max(1, ⌊p/3⌋) for regression.
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: 10,
            min_leaf: 1,
            max_features: None,
            seed: 42,
        }
    }
}

pub fn default_mtry(task: Task, p: usize) -> usize {
    match task {
        Task::Classification => ((p as f64).sqrt().ceil() as usize).clamp(1, p),
        Task::Regression => (p / 3).max(1),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeNode>,
    pub task: Task,
    pub params: ForestParams,
    feature_names: Vec<String>,
}

/// Normalized impurity-decrease importances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub names: Vec<String>,
    pub weights: Vec<f64>,
    /// Set when the forest has no informative split and the weights are the
    /// uniform fallback.
    pub uniform_fallback: bool,
}

impl FeatureImportance {
    /// Index of the largest weight (first on ties).
    pub fn top(&self) -> usize {
        let mut best = 0;
        for (i, w) in self.weights.iter().enumerate() {
            if *w > self.weights[best] {
                best = i;
            }
        }
        best
    }
}

pub fn fit_forest(
    x: &FeatureMatrix,
    targets: Targets<'_>,
    params: &ForestParams,
) -> Result<ForestModel, LearnerError> {
    check_training(x, targets.len())?;
    check_targets(&targets)?;
    if params.n_trees == 0 {
        return Err(LearnerError::InvalidParameter("trees must be >= 1".into()));
    }
    if params.max_depth == 0 {
        return Err(LearnerError::InvalidParameter("depth must be >= 1".into()));
    }
    let task = targets.task();
    let tree_params = TreeParams {
        max_depth: Some(params.max_depth),
        min_leaf: params.min_leaf,
        max_features: Some(params.max_features.unwrap_or(default_mtry(task, x.n_cols()))),
    };
    let n = x.n_rows();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, t as u64));
            let mut rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let split_seed: u64 = rng.random();
            fit_tree_on_rows(x, targets, &mut rows, &tree_params, split_seed)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ForestModel {
        trees,
        task,
        params: *params,
        feature_names: x.names().to_vec(),
    })
}

impl ForestModel {
    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn predict(&self, query: &[f64]) -> Prediction {
        match self.task {
            Task::Regression => {
                let sum: f64 = self
                    .trees
                    .iter()
                    .map(|t| eval_tree(t, query).value().unwrap_or(0.0))
                    .sum();
                Prediction::Value(sum / self.trees.len() as f64)
            }
            Task::Classification => {
                let mut votes = [0usize; Zone::COUNT];
                for t in &self.trees {
                    if let Some(z) = eval_tree(t, query).majority() {
                        votes[z.index()] += 1;
                    }
                }
                Prediction::Class(PredictionWithConfidence::from_votes(votes))
            }
        }
    }

    pub fn feature_importance(&self) -> FeatureImportance {
        let p = self.feature_names.len();
        let mut gains = vec![0.0; p];
        for t in &self.trees {
            t.accumulate_gains(&mut gains);
        }
        let total: f64 = gains.iter().sum();
        let (weights, uniform_fallback) = if total > 0.0 {
            (gains.iter().map(|g| g / total).collect(), false)
        } else {
            (vec![1.0 / p as f64; p], true)
        };
        FeatureImportance {
            names: self.feature_names.clone(),
            weights,
            uniform_fallback,
        }
    }
}
