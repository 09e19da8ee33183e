//! Greedy binary CART trees.
//!
//! Regression splits minimize the summed squared deviation from the child
//! means; classification splits minimize the size-weighted Gini impurity.
//! Candidate thresholds are midpoints between consecutive distinct sorted
//! values. The `left` branch holds rows with `value > threshold`, which is
//! the order printed trees list their rules in.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_targets, check_training, FeatureMatrix, LearnerError, Targets};
use crate::data::Zone;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LeafPayload {
    Value(f64),
    Counts([usize; Zone::COUNT]),
}

impl LeafPayload {
    /// Majority class of a count table, ties to the earlier zone.
    pub fn majority(&self) -> Option<Zone> {
        match self {
            LeafPayload::Counts(c) => {
                let mut best = 0;
                for i in 1..Zone::COUNT {
                    if c[i] > c[best] {
                        best = i;
                    }
                }
                Some(Zone::ALL[best])
            }
            LeafPayload::Value(_) => None,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            LeafPayload::Value(v) => Some(*v),
            LeafPayload::Counts(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        /// Training impurity decrease of this split (sum-of-squares or
        /// size-weighted Gini units).
        gain: f64,
        count: usize,
        /// Rows with `value > threshold`.
        left: Box<TreeNode>,
        /// Rows with `value <= threshold`.
        right: Box<TreeNode>,
    },
    Leaf {
        payload: LeafPayload,
        count: usize,
    },
}

impl TreeNode {
    pub fn leaf_value(value: f64, count: usize) -> TreeNode {
        TreeNode::Leaf {
            payload: LeafPayload::Value(value),
            count,
        }
    }

    pub fn split(feature: usize, threshold: f64, left: TreeNode, right: TreeNode) -> TreeNode {
        let count = left.count() + right.count();
        TreeNode::Split {
            feature,
            threshold,
            gain: 0.0,
            count,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn count(&self) -> usize {
        match self {
            TreeNode::Split { count, .. } | TreeNode::Leaf { count, .. } => *count,
        }
    }

    /// Number of split levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    pub(crate) fn accumulate_gains(&self, out: &mut [f64]) {
        if let TreeNode::Split {
            feature,
            gain,
            left,
            right,
            ..
        } = self
        {
            out[*feature] += gain;
            left.accumulate_gains(out);
            right.accumulate_gains(out);
        }
    }

    /// Rule-per-line rendering, `| ` per depth level, three decimals.
    pub fn render(&self, feature_names: &[String]) -> String {
        let mut out = String::new();
        match self {
            TreeNode::Leaf { payload, count } => {
                let _ = writeln!(out, "{}", leaf_text(payload, *count));
            }
            TreeNode::Split { .. } => render_into(self, feature_names, 0, &mut out),
        }
        out
    }
}

fn leaf_text(payload: &LeafPayload, count: usize) -> String {
    match payload {
        LeafPayload::Value(v) => format!("{v:.3} {{count={count}}}"),
        LeafPayload::Counts(c) => {
            let label = payload.majority().unwrap_or(Zone::Bedroom);
            let parts: Vec<String> = Zone::ALL
                .iter()
                .map(|z| format!("{z}={}", c[z.index()]))
                .collect();
            format!("{label} {{{}}}", parts.join(", "))
        }
    }
}

fn render_into(node: &TreeNode, names: &[String], depth: usize, out: &mut String) {
    if let TreeNode::Split {
        feature,
        threshold,
        left,
        right,
        ..
    } = node
    {
        let name = names
            .get(*feature)
            .cloned()
            .unwrap_or_else(|| format!("f{feature}"));
        for (op, child) in [(">", left), ("<=", right)] {
            out.push_str(&"| ".repeat(depth));
            let _ = write!(out, "{name} {op} {threshold:.3}");
            match child.as_ref() {
                TreeNode::Leaf { payload, count } => {
                    let _ = writeln!(out, ": {}", leaf_text(payload, *count));
                }
                split => {
                    out.push('\n');
                    render_into(split, names, depth + 1, out);
                }
            }
        }
    }
}

/// Descends from `root` (left on `value > threshold`) to a leaf payload.
pub fn eval_tree<'a>(root: &'a TreeNode, features: &[f64]) -> &'a LeafPayload {
    let mut node = root;
    loop {
        match node {
            TreeNode::Leaf { payload, .. } => return payload,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                node = if features[*feature] > *threshold {
                    left
                } else {
                    right
                };
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until the other stopping rules apply.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features drawn per split; `None` considers all of them.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: Some(10),
            min_leaf: 1,
            max_features: None,
        }
    }
}

impl TreeParams {
    fn validate(&self, p: usize) -> Result<(), LearnerError> {
        if self.min_leaf == 0 {
            return Err(LearnerError::InvalidParameter("min_leaf must be >= 1".into()));
        }
        if self.max_depth == Some(0) {
            return Err(LearnerError::InvalidParameter("max_depth must be >= 1".into()));
        }
        if let Some(m) = self.max_features {
            if m == 0 || m > p {
                return Err(LearnerError::InvalidParameter(format!(
                    "max_features {m} outside 1..={p}"
                )));
            }
        }
        Ok(())
    }
}

struct Builder<'a> {
    x: &'a FeatureMatrix,
    targets: Targets<'a>,
    params: TreeParams,
    rng: ChaCha8Rng,
    order: Vec<usize>,
}

struct BestSplit {
    score: f64,
    feature: usize,
    threshold: f64,
}

impl Builder<'_> {
    fn payload(&self, idx: &[usize]) -> LeafPayload {
        match self.targets {
            Targets::Values(y) => {
                LeafPayload::Value(idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64)
            }
            Targets::Classes(c) => {
                let mut counts = [0usize; Zone::COUNT];
                for &i in idx {
                    counts[c[i].index()] += 1;
                }
                LeafPayload::Counts(counts)
            }
        }
    }

    fn is_pure(&self, idx: &[usize]) -> bool {
        match self.targets {
            Targets::Values(y) => {
                let first = y[idx[0]];
                idx.iter().all(|&i| y[i] == first)
            }
            Targets::Classes(c) => {
                let first = c[idx[0]];
                idx.iter().all(|&i| c[i] == first)
            }
        }
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let p = self.x.n_cols();
        match self.params.max_features {
            Some(m) if m < p => {
                let mut f = sample(&mut self.rng, p, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..p).collect(),
        }
    }

    /// Impurity of the whole node, in the same units as split scores.
    fn node_impurity(&self, idx: &[usize]) -> f64 {
        match self.targets {
            Targets::Values(y) => {
                let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
                idx.iter().map(|&i| (y[i] - mean).powi(2)).sum()
            }
            Targets::Classes(c) => {
                let mut counts = [0usize; Zone::COUNT];
                for &i in idx {
                    counts[c[i].index()] += 1;
                }
                weighted_gini(&counts, idx.len())
            }
        }
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<BestSplit> {
        let n = idx.len();
        let min_leaf = self.params.min_leaf;
        let features = self.candidate_features();
        let mut best: Option<BestSplit> = None;
        let center = match self.targets {
            Targets::Values(y) => idx.iter().map(|&i| y[i]).sum::<f64>() / n as f64,
            Targets::Classes(_) => 0.0,
        };
        for f in features {
            self.order.clear();
            self.order.extend_from_slice(idx);
            let x = self.x;
            self.order
                .sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)).then(a.cmp(&b)));
            let order = &self.order;
            let mut scorer = SweepScorer::new(self.targets, order, center);
            for pos in 1..n {
                scorer.advance(order[pos - 1]);
                if pos < min_leaf || n - pos < min_leaf {
                    continue;
                }
                let lo = x.get(order[pos - 1], f);
                let hi = x.get(order[pos], f);
                if lo >= hi {
                    continue;
                }
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                let score = scorer.score(pos, n);
                let better = match &best {
                    None => true,
                    Some(b) => score < b.score - 1e-12 * b.score.abs().max(1e-300),
                };
                if better {
                    best = Some(BestSplit {
                        score,
                        feature: f,
                        threshold,
                    });
                }
            }
        }
        best
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) -> TreeNode {
        let n = idx.len();
        let at_limit = self.params.max_depth.is_some_and(|d| depth >= d);
        if at_limit || n < 2 * self.params.min_leaf || self.is_pure(idx) {
            return TreeNode::Leaf {
                payload: self.payload(idx),
                count: n,
            };
        }
        let Some(best) = self.best_split(idx) else {
            return TreeNode::Leaf {
                payload: self.payload(idx),
                count: n,
            };
        };
        let parent = self.node_impurity(idx);
        let feature = best.feature;
        let threshold = best.threshold;
        let x = self.x;
        // Partition: rows above the threshold first.
        let mut split_at = 0;
        for i in 0..n {
            if x.get(idx[i], feature) > threshold {
                idx.swap(i, split_at);
                split_at += 1;
            }
        }
        let (above, below) = idx.split_at_mut(split_at);
        let left = self.build(above, depth + 1);
        let right = self.build(below, depth + 1);
        TreeNode::Split {
            feature,
            threshold,
            gain: (parent - best.score).max(0.0),
            count: n,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

fn weighted_gini(counts: &[usize; Zone::COUNT], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
    n as f64 - sq / n as f64
}

/// Incremental impurity of the `(lower prefix, upper suffix)` partition of a
/// sorted index list.
enum SweepScorer {
    Values {
        y: Vec<f64>,
        sum_lo: f64,
        sq_lo: f64,
        sum_all: f64,
        sq_all: f64,
    },
    Classes {
        labels: Vec<usize>,
        lo: [usize; Zone::COUNT],
        all: [usize; Zone::COUNT],
    },
}

impl SweepScorer {
    fn new(targets: Targets<'_>, order: &[usize], center: f64) -> SweepScorer {
        match targets {
            Targets::Values(y) => {
                let y: Vec<f64> = (0..y.len()).map(|i| y[i] - center).collect();
                let sum_all = order.iter().map(|&i| y[i]).sum();
                let sq_all = order.iter().map(|&i| y[i] * y[i]).sum();
                SweepScorer::Values {
                    y,
                    sum_lo: 0.0,
                    sq_lo: 0.0,
                    sum_all,
                    sq_all,
                }
            }
            Targets::Classes(c) => {
                let labels: Vec<usize> = c.iter().map(|z| z.index()).collect();
                let mut all = [0usize; Zone::COUNT];
                for &i in order {
                    all[labels[i]] += 1;
                }
                SweepScorer::Classes {
                    labels,
                    lo: [0; Zone::COUNT],
                    all,
                }
            }
        }
    }

    fn advance(&mut self, row: usize) {
        match self {
            SweepScorer::Values { y, sum_lo, sq_lo, .. } => {
                *sum_lo += y[row];
                *sq_lo += y[row] * y[row];
            }
            SweepScorer::Classes { labels, lo, .. } => lo[labels[row]] += 1,
        }
    }

    fn score(&self, n_lo: usize, n: usize) -> f64 {
        let n_hi = n - n_lo;
        match self {
            SweepScorer::Values {
                sum_lo,
                sq_lo,
                sum_all,
                sq_all,
                ..
            } => {
                let sum_hi = sum_all - sum_lo;
                let sq_hi = sq_all - sq_lo;
                let sse_lo = (sq_lo - sum_lo * sum_lo / n_lo as f64).max(0.0);
                let sse_hi = (sq_hi - sum_hi * sum_hi / n_hi as f64).max(0.0);
                sse_lo + sse_hi
            }
            SweepScorer::Classes { lo, all, .. } => {
                let mut hi = [0usize; Zone::COUNT];
                for k in 0..Zone::COUNT {
                    hi[k] = all[k] - lo[k];
                }
                weighted_gini(lo, n_lo) + weighted_gini(&hi, n_hi)
            }
        }
    }
}

/// Fits a tree on every row of `x`.
pub fn fit_tree(
    x: &FeatureMatrix,
    targets: Targets<'_>,
    params: &TreeParams,
    seed: u64,
) -> Result<TreeNode, LearnerError> {
    let mut rows: Vec<usize> = (0..x.n_rows()).collect();
    fit_tree_on_rows(x, targets, &mut rows, params, seed)
}

/// Fits a tree on the given row multiset (duplicates allowed, as in a
/// bootstrap sample).
pub(crate) fn fit_tree_on_rows(
    x: &FeatureMatrix,
    targets: Targets<'_>,
    rows: &mut [usize],
    params: &TreeParams,
    seed: u64,
) -> Result<TreeNode, LearnerError> {
    check_training(x, targets.len())?;
    check_targets(&targets)?;
    params.validate(x.n_cols())?;
    if rows.is_empty() {
        return Err(LearnerError::EmptyTrainingSet);
    }
    if rows.len() < params.min_leaf {
        return Err(LearnerError::InsufficientData {
            needed: params.min_leaf,
            got: rows.len(),
        });
    }
    let mut builder = Builder {
        x,
        targets,
        params: *params,
        rng: ChaCha8Rng::seed_from_u64(seed),
        order: Vec::with_capacity(rows.len()),
    };
    Ok(builder.build(rows, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unlimited() -> TreeParams {
        TreeParams {
            max_depth: None,
            min_leaf: 1,
            max_features: None,
        }
    }

    #[test]
    fn constant_target_is_single_leaf() {
        let x = FeatureMatrix::from_rows(&[[1.0], [2.0], [3.0]]).unwrap();
        let t = fit_tree(&x, Targets::Values(&[4.5, 4.5, 4.5]), &unlimited(), 0).unwrap();
        assert_eq!(t, TreeNode::leaf_value(4.5, 3));
    }

    #[test]
    fn one_dimensional_step() {
        let x = FeatureMatrix::from_rows(&[[1.0], [2.0], [3.0], [4.0]]).unwrap();
        let y = [0.0, 0.0, 10.0, 10.0];
        let params = TreeParams {
            max_depth: Some(1),
            ..unlimited()
        };
        let t = fit_tree(&x, Targets::Values(&y), &params, 0).unwrap();
        match &t {
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
                gain,
                ..
            } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 2.5);
                assert_eq!(left.as_ref(), &TreeNode::leaf_value(10.0, 2));
                assert_eq!(right.as_ref(), &TreeNode::leaf_value(0.0, 2));
                assert_eq!(*gain, 100.0);
            }
            other => panic!("expected split, got {other:?}"),
        }
        for (i, &target) in y.iter().enumerate() {
            assert_eq!(eval_tree(&t, x.row(i)).value(), Some(target));
        }
    }

    #[test]
    fn split_ties_prefer_lower_feature_then_lower_threshold() {
        // Both features separate the classes identically.
        let x = FeatureMatrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]).unwrap();
        let y = [0.0, 1.0, 1.0, 1.0];
        let params = TreeParams {
            max_depth: Some(1),
            ..unlimited()
        };
        match fit_tree(&x, Targets::Values(&y), &params, 0).unwrap() {
            TreeNode::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 0.5);
            }
            other => panic!("{other:?}"),
        }
        // Symmetric targets: thresholds 0.5 and 2.5 tie; the lower one wins.
        let y = [0.0, 1.0, 1.0, 0.0];
        match fit_tree(&x, Targets::Values(&y), &params, 0).unwrap() {
            TreeNode::Split { threshold, .. } => assert_eq!(threshold, 0.5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gini_classification() {
        let x = FeatureMatrix::from_rows(&[[0.0], [1.0], [2.0], [3.0], [4.0]]).unwrap();
        let c = [Zone::Kitchen, Zone::Kitchen, Zone::Toilet, Zone::Toilet, Zone::Toilet];
        let t = fit_tree(&x, Targets::Classes(&c), &unlimited(), 0).unwrap();
        assert_eq!(t.depth(), 1);
        assert_eq!(eval_tree(&t, &[0.2]).majority(), Some(Zone::Kitchen));
        assert_eq!(eval_tree(&t, &[3.7]), &LeafPayload::Counts([0, 0, 0, 3]));
    }

    #[test]
    fn xor_is_fitted_exactly_without_depth_limit() {
        let x = FeatureMatrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
        let y = [0.0, 1.0, 1.0, 0.0];
        let t = fit_tree(&x, Targets::Values(&y), &unlimited(), 0).unwrap();
        for (i, want) in y.iter().enumerate() {
            assert_eq!(eval_tree(&t, x.row(i)).value(), Some(*want));
        }
    }

    #[test]
    fn min_leaf_respected() {
        let rows: Vec<[f64; 1]> = (0..10).map(|i| [i as f64]).collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        let params = TreeParams {
            max_depth: None,
            min_leaf: 3,
            max_features: None,
        };
        let t = fit_tree(&x, Targets::Values(&y), &params, 0).unwrap();
        fn check(n: &TreeNode) {
            match n {
                TreeNode::Leaf { count, .. } => assert!(*count >= 3),
                TreeNode::Split { left, right, .. } => {
                    check(left);
                    check(right);
                }
            }
        }
        check(&t);
        assert!(fit_tree(&x, Targets::Values(&y[..2]), &params, 0).is_err());
    }

    #[test]
    fn empty_training_set_rejected() {
        let x = FeatureMatrix::new(vec![], 1, vec!["a".into()]).unwrap();
        assert!(matches!(
            fit_tree(&x, Targets::Values(&[]), &unlimited(), 0),
            Err(LearnerError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn renders_rule_per_line() {
        let tree = TreeNode::split(
            0,
            1.344,
            TreeNode::leaf_value(122.0, 30),
            TreeNode::split(
                1,
                1.335,
                TreeNode::leaf_value(122.0, 30),
                TreeNode::leaf_value(79.0, 24),
            ),
        );
        let names = vec!["Distance A".to_string(), "Distance B".to_string()];
        let text = tree.render(&names);
        assert_eq!(
            text,
            "Distance A > 1.344: 122.000 {count=30}\n\
             Distance A <= 1.344\n\
             | Distance B > 1.335: 122.000 {count=30}\n\
             | Distance B <= 1.335: 79.000 {count=24}\n"
        );
    }
}
