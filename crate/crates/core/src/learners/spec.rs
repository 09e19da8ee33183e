//! Learner selection and hyperparameters as plain `key=value` text.
//!
//! ```text
//! family=random_forest trees=100 depth=10 seed=7
//! family=deep_learning layers=50,50 rate=0.05
//! ```
//!
//! Pairs are separated by whitespace, `;` or `,`; a comma-separated list
//! continues the previous value (`layers=50,50`).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    fit_forest, fit_gbt, fit_knn, fit_mlp, fit_ols, fit_svr, fit_tree, standardize,
    FeatureMatrix, ForestModel, ForestParams, GbtModel, GbtParams, KnnModel, LearnerError,
    LinearModel, MlpModel, MlpParams, Prediction, PredictionWithConfidence, Standardizer,
    SvrModel, SvrParams, Targets, Task, TreeNode, TreeParams,
};
use super::{eval_tree, Activation, Kernel, LeafPayload};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    RandomForest,
    Ann,
    DecisionTree,
    Svr,
    Knn,
    Gbt,
    DeepLearning,
    LinearRegression,
}

impl Family {
    /// Comparison-table row order.
    pub const ALL: [Family; 8] = [
        Family::RandomForest,
        Family::Ann,
        Family::DecisionTree,
        Family::Svr,
        Family::Knn,
        Family::Gbt,
        Family::DeepLearning,
        Family::LinearRegression,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Knn => "knn",
            Family::DecisionTree => "decision_tree",
            Family::RandomForest => "random_forest",
            Family::Gbt => "gbt",
            Family::LinearRegression => "linear_regression",
            Family::Svr => "svr",
            Family::Ann => "ann",
            Family::DeepLearning => "deep_learning",
        }
    }

    /// Human-readable name used in comparison tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Family::RandomForest => "Random Forest",
            Family::Ann => "Artificial Neural Network",
            Family::DecisionTree => "Decision Tree",
            Family::Svr => "Support Vector Machine",
            Family::Knn => "k-NN",
            Family::Gbt => "Gradient Boosted Trees",
            Family::DeepLearning => "Deep Learning",
            Family::LinearRegression => "Linear Regression",
        }
    }

    pub fn supports(self, task: Task) -> bool {
        match task {
            Task::Regression => true,
            Task::Classification => !matches!(
                self,
                Family::Gbt | Family::LinearRegression | Family::Svr
            ),
        }
    }

    fn standardizes(self) -> bool {
        matches!(
            self,
            Family::Knn | Family::Svr | Family::Ann | Family::DeepLearning
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = LearnerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Ok(match norm.as_str() {
            "knn" | "k_nn" => Family::Knn,
            "decision_tree" | "dt" | "tree" => Family::DecisionTree,
            "random_forest" | "rf" | "forest" => Family::RandomForest,
            "gbt" | "gradient_boosted_trees" => Family::Gbt,
            "linear_regression" | "lr" | "ols" => Family::LinearRegression,
            "svr" | "svm" => Family::Svr,
            "ann" | "mlp" => Family::Ann,
            "deep_learning" | "dl" => Family::DeepLearning,
            _ => {
                return Err(LearnerError::InvalidParameter(format!(
                    "unknown model family `{s}`"
                )))
            }
        })
    }
}

/// Overrides; `None` means the family default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub k: Option<usize>,
    pub trees: Option<usize>,
    pub depth: Option<usize>,
    pub rate: Option<f64>,
    pub layers: Option<Vec<usize>>,
    pub epochs: Option<usize>,
    pub c: Option<f64>,
    pub epsilon: Option<f64>,
    pub gamma: Option<f64>,
    pub kernel: Option<KernelChoice>,
    pub activation: Option<Activation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelChoice {
    Linear,
    Rbf,
}

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub family: Family,
    pub hyper: Hyperparameters,
    pub seed: u64,
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, LearnerError> {
    value
        .trim()
        .parse()
        .map_err(|_| LearnerError::InvalidParameter(format!("{key}: cannot parse `{value}`")))
}

impl LearnerSpec {
    pub fn preset(family: Family) -> LearnerSpec {
        LearnerSpec {
            family,
            hyper: Hyperparameters::default(),
            seed: DEFAULT_SEED,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> LearnerSpec {
        self.seed = seed;
        self
    }

    pub fn parse(text: &str) -> Result<LearnerSpec, LearnerError> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for token in text
            .split(|c: char| c.is_whitespace() || c == ';' || c == ',')
            .filter(|t| !t.is_empty())
        {
            match token.split_once('=') {
                Some((k, v)) => pairs.push((k.trim().to_ascii_lowercase(), v.trim().to_string())),
                None => match pairs.last_mut() {
                    Some((_, v)) => {
                        v.push(',');
                        v.push_str(token);
                    }
                    None => {
                        return Err(LearnerError::InvalidParameter(format!(
                            "expected key=value, got `{token}`"
                        )))
                    }
                },
            }
        }
        let family = pairs
            .iter()
            .find(|(k, _)| k == "family" || k == "model")
            .map(|(_, v)| v.parse::<Family>())
            .transpose()?
            .ok_or_else(|| LearnerError::InvalidParameter("missing `family=`".into()))?;
        let mut spec = LearnerSpec::preset(family);
        for (key, value) in &pairs {
            spec.set(key, value)?;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), LearnerError> {
        let h = &mut self.hyper;
        match key.to_ascii_lowercase().as_str() {
            "family" | "model" => self.family = value.parse()?,
            "k" => h.k = Some(parse_num(key, value)?),
            "trees" => h.trees = Some(parse_num(key, value)?),
            "depth" => h.depth = Some(parse_num(key, value)?),
            "rate" => h.rate = Some(parse_num(key, value)?),
            "epochs" => h.epochs = Some(parse_num(key, value)?),
            "c" => h.c = Some(parse_num(key, value)?),
            "epsilon" => h.epsilon = Some(parse_num(key, value)?),
            "gamma" => h.gamma = Some(parse_num(key, value)?),
            "seed" => self.seed = parse_num(key, value)?,
            "kernel" => {
                h.kernel = Some(match value.trim().to_ascii_lowercase().as_str() {
                    "linear" => KernelChoice::Linear,
                    "rbf" => KernelChoice::Rbf,
                    other => {
                        return Err(LearnerError::InvalidParameter(format!(
                            "kernel: unknown `{other}`"
                        )))
                    }
                })
            }
            "activation" => {
                h.activation = Some(match value.trim().to_ascii_lowercase().as_str() {
                    "sigmoid" => Activation::Sigmoid,
                    "relu" => Activation::Relu,
                    other => {
                        return Err(LearnerError::InvalidParameter(format!(
                            "activation: unknown `{other}`"
                        )))
                    }
                })
            }
            "layers" => {
                let sizes = value
                    .split([',', 'x', ':'])
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_num::<usize>(key, s))
                    .collect::<Result<Vec<_>, _>>()?;
                if sizes.is_empty() {
                    return Err(LearnerError::InvalidParameter("layers: empty list".into()));
                }
                h.layers = Some(sizes);
            }
            other => {
                return Err(LearnerError::InvalidParameter(format!(
                    "unknown hyperparameter `{other}`"
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), LearnerError> {
        let h = &self.hyper;
        let bad = |m: String| Err(LearnerError::InvalidParameter(m));
        if h.k == Some(0) {
            return bad("k must be >= 1".into());
        }
        if h.trees == Some(0) {
            return bad("trees must be >= 1".into());
        }
        if h.depth == Some(0) {
            return bad("depth must be >= 1".into());
        }
        if h.epochs == Some(0) {
            return bad("epochs must be >= 1".into());
        }
        if let Some(r) = h.rate {
            if !(r > 0.0 && r <= 1.0) {
                return bad(format!("rate {r} outside (0, 1]"));
            }
        }
        if let Some(l) = &h.layers {
            if l.contains(&0) {
                return bad("layer sizes must be >= 1".into());
            }
        }
        if let Some(c) = h.c {
            if !(c > 0.0 && c.is_finite()) {
                return bad(format!("C = {c} must be > 0"));
            }
        }
        if let Some(e) = h.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                return bad(format!("epsilon = {e} must be >= 0"));
            }
        }
        if let Some(g) = h.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return bad(format!("gamma = {g} must be > 0"));
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.hyper.k.unwrap_or(DEFAULT_K)
    }

    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: Some(self.hyper.depth.unwrap_or(10)),
            min_leaf: 1,
            max_features: None,
        }
    }

    pub fn forest_params(&self) -> ForestParams {
        let d = ForestParams::default();
        ForestParams {
            n_trees: self.hyper.trees.unwrap_or(d.n_trees),
            max_depth: self.hyper.depth.unwrap_or(d.max_depth),
            seed: self.seed,
            ..d
        }
    }

    pub fn gbt_params(&self) -> GbtParams {
        let d = GbtParams::default();
        GbtParams {
            n_trees: self.hyper.trees.unwrap_or(d.n_trees),
            max_depth: self.hyper.depth.unwrap_or(d.max_depth),
            rate: self.hyper.rate.unwrap_or(d.rate),
            ..d
        }
    }

    pub fn svr_params(&self) -> SvrParams {
        let d = SvrParams::default();
        let kernel = match self.hyper.kernel.unwrap_or(KernelChoice::Rbf) {
            KernelChoice::Linear => Kernel::Linear,
            KernelChoice::Rbf => Kernel::Rbf {
                gamma: self.hyper.gamma,
            },
        };
        SvrParams {
            c: self.hyper.c.unwrap_or(d.c),
            epsilon: self.hyper.epsilon.unwrap_or(d.epsilon),
            kernel,
            seed: self.seed,
            ..d
        }
    }

    pub fn mlp_params(&self) -> MlpParams {
        let d = if self.family == Family::DeepLearning {
            MlpParams::deep_learning()
        } else {
            MlpParams::ann()
        };
        MlpParams {
            hidden: self.hyper.layers.clone().unwrap_or(d.hidden),
            rate: self.hyper.rate.unwrap_or(d.rate),
            epochs: self.hyper.epochs.unwrap_or(d.epochs),
            activation: self.hyper.activation.unwrap_or(d.activation),
            seed: self.seed,
            ..d
        }
    }

    /// Every effective setting for this family, defaults included.
    pub fn resolved(&self) -> BTreeMap<&'static str, String> {
        let mut out = BTreeMap::new();
        out.insert("family", self.family.to_string());
        out.insert("seed", self.seed.to_string());
        match self.family {
            Family::Knn => {
                out.insert("k", self.k().to_string());
            }
            Family::DecisionTree => {
                out.insert("depth", self.hyper.depth.unwrap_or(10).to_string());
            }
            Family::RandomForest => {
                let p = self.forest_params();
                out.insert("trees", p.n_trees.to_string());
                out.insert("depth", p.max_depth.to_string());
            }
            Family::Gbt => {
                let p = self.gbt_params();
                out.insert("trees", p.n_trees.to_string());
                out.insert("depth", p.max_depth.to_string());
                out.insert("rate", p.rate.to_string());
            }
            Family::LinearRegression => {}
            Family::Svr => {
                let p = self.svr_params();
                out.insert("c", p.c.to_string());
                out.insert("epsilon", p.epsilon.to_string());
                match p.kernel {
                    Kernel::Linear => {
                        out.insert("kernel", "linear".into());
                    }
                    Kernel::Rbf { gamma } => {
                        out.insert("kernel", "rbf".into());
                        out.insert(
                            "gamma",
                            gamma.map_or_else(|| "1/p".to_string(), |g| g.to_string()),
                        );
                    }
                }
            }
            Family::Ann | Family::DeepLearning => {
                let p = self.mlp_params();
                let layers: Vec<String> = p.hidden.iter().map(|s| s.to_string()).collect();
                out.insert("layers", layers.join(","));
                out.insert("activation", format!("{:?}", p.activation).to_ascii_lowercase());
                out.insert("rate", p.rate.to_string());
                out.insert("epochs", p.epochs.to_string());
            }
        }
        out
    }

    pub fn fit(&self, x: &FeatureMatrix, targets: Targets<'_>) -> Result<FittedModel, LearnerError> {
        self.validate()?;
        let task = targets.task();
        if !self.family.supports(task) {
            return Err(LearnerError::Unsupported {
                family: self.family.to_string(),
                task,
            });
        }
        let (standardizer, scaled) = if self.family.standardizes() {
            let (s, t) = standardize(x);
            (Some(s), t)
        } else {
            (None, x.clone())
        };
        let values = |t: Targets<'_>| match t {
            Targets::Values(v) => v.to_vec(),
            Targets::Classes(_) => unreachable!("checked by supports()"),
        };
        let inner = match self.family {
            Family::Knn => Inner::Knn(fit_knn(&scaled, targets, self.k())?),
            Family::DecisionTree => Inner::Tree(fit_tree(&scaled, targets, &self.tree_params(), self.seed)?),
            Family::RandomForest => Inner::Forest(fit_forest(&scaled, targets, &self.forest_params())?),
            Family::Gbt => Inner::Gbt(fit_gbt(&scaled, &values(targets), &self.gbt_params())?),
            Family::LinearRegression => Inner::Linear(fit_ols(&scaled, &values(targets))?),
            Family::Svr => Inner::Svr(fit_svr(&scaled, &values(targets), &self.svr_params())?),
            Family::Ann | Family::DeepLearning => Inner::Mlp(fit_mlp(&scaled, targets, &self.mlp_params())?),
        };
        Ok(FittedModel {
            family: self.family,
            standardizer,
            inner,
        })
    }
}

impl fmt::Display for LearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .resolved()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        f.write_str(&parts.join(" "))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum Inner {
    Knn(KnnModel),
    Tree(TreeNode),
    Forest(ForestModel),
    Gbt(GbtModel),
    Linear(LinearModel),
    Svr(SvrModel),
    Mlp(MlpModel),
}

/// A trained model of any family, with its input standardization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedModel {
    pub family: Family,
    standardizer: Option<Standardizer>,
    inner: Inner,
}

impl FittedModel {
    pub fn predict(&self, query: &[f64]) -> Prediction {
        let scaled;
        let q = match &self.standardizer {
            Some(s) => {
                scaled = s.transform_row(query);
                &scaled[..]
            }
            None => query,
        };
        match &self.inner {
            Inner::Knn(m) => m.predict(q),
            Inner::Tree(t) => match eval_tree(t, q) {
                LeafPayload::Value(v) => Prediction::Value(*v),
                LeafPayload::Counts(c) => Prediction::Class(PredictionWithConfidence::from_votes(*c)),
            },
            Inner::Forest(m) => m.predict(q),
            Inner::Gbt(m) => Prediction::Value(m.predict(q)),
            Inner::Linear(m) => Prediction::Value(m.predict(q)),
            Inner::Svr(m) => Prediction::Value(m.predict(q)),
            Inner::Mlp(m) => m.predict(q),
        }
    }

    pub fn forest(&self) -> Option<&ForestModel> {
        match &self.inner {
            Inner::Forest(m) => Some(m),
            _ => None,
        }
    }

    pub fn tree(&self) -> Option<&TreeNode> {
        match &self.inner {
            Inner::Tree(t) => Some(t),
            _ => None,
        }
    }
}
