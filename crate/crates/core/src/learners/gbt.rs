//! Stagewise least-squares gradient boosting of regression trees.

use serde::{Deserialize, Serialize};

use super::{
    check_targets, check_training, eval_tree, fit_tree, FeatureMatrix, LearnerError, Targets,
    TreeNode, TreeParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub rate: f64,
    pub min_leaf: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_trees: 100,
            max_depth: 5,
            rate: 0.1,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbtModel {
    pub base: f64,
    pub rate: f64,
    pub trees: Vec<TreeNode>,
    /// Training mean squared error after the baseline and after each stage.
    pub loss_history: Vec<f64>,
}

fn mse(residuals: &[f64]) -> f64 {
    residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64
}

pub fn fit_gbt(x: &FeatureMatrix, y: &[f64], params: &GbtParams) -> Result<GbtModel, LearnerError> {
    check_training(x, y.len())?;
    check_targets(&Targets::Values(y))?;
    if params.n_trees == 0 {
        return Err(LearnerError::InvalidParameter("trees must be >= 1".into()));
    }
    if params.max_depth == 0 {
        return Err(LearnerError::InvalidParameter("depth must be >= 1".into()));
    }
    if !(params.rate > 0.0 && params.rate <= 1.0) {
        return Err(LearnerError::InvalidParameter(format!(
            "rate {} outside (0, 1]",
            params.rate
        )));
    }
    let tree_params = TreeParams {
        max_depth: Some(params.max_depth),
        min_leaf: params.min_leaf,
        max_features: None,
    };
    let base = y.iter().sum::<f64>() / y.len() as f64;
    let mut residuals: Vec<f64> = y.iter().map(|v| v - base).collect();
    let mut loss_history = vec![mse(&residuals)];
    let mut trees = Vec::with_capacity(params.n_trees);
    for _ in 0..params.n_trees {
        // Every feature is considered at every split, so the stage trees are
        // fully determined by the data.
        let tree = fit_tree(x, Targets::Values(&residuals), &tree_params, 0)?;
        for (i, r) in residuals.iter_mut().enumerate() {
            *r -= params.rate * eval_tree(&tree, x.row(i)).value().unwrap_or(0.0);
        }
        let loss = mse(&residuals);
        if !loss.is_finite() {
            return Err(LearnerError::Diverged {
                epoch: trees.len() + 1,
                detail: "non-finite training loss".into(),
            });
        }
        loss_history.push(loss);
        trees.push(tree);
    }
    Ok(GbtModel {
        base,
        rate: params.rate,
        trees,
        loss_history,
    })
}

impl GbtModel {
    pub fn predict(&self, query: &[f64]) -> f64 {
        let boost: f64 = self
            .trees
            .iter()
            .map(|t| eval_tree(t, query).value().unwrap_or(0.0))
            .sum();
        self.base + self.rate * boost
    }
}
