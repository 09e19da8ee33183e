use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, Record, Zone};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// Fraction of rows assigned to training, in `(0, 1]`.
    pub train_ratio: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitConfig {
    pub fn new(train_ratio: f64, seed: u64, stratified: bool) -> Self {
        SplitConfig {
            train_ratio,
            seed,
            stratified,
        }
    }

    fn validate(&self) -> Result<(), DataError> {
        if !(self.train_ratio > 0.0 && self.train_ratio <= 1.0) {
            return Err(DataError::InvalidSplit(format!(
                "train_ratio {} is outside (0, 1]",
                self.train_ratio
            )));
        }
        Ok(())
    }
}

/// Row indices of each side of a split, both sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// `floor(ratio * n)`, immune to products like `0.7 * 250` landing a hair
/// below an integer.
fn train_count(ratio: f64, n: usize) -> usize {
    let exact = ratio * n as f64;
    let rounded = exact.round();
    let count = if (exact - rounded).abs() < 1e-9 {
        rounded
    } else {
        exact.floor()
    };
    (count as usize).min(n)
}

/// Computes a seeded split of `n` rows.
///
/// With `strata`, every class contributes `floor(ratio * class_size)` rows,
/// topped up by one row for the classes with the largest fractional
/// remainders (ties by zone order) until the global `floor(ratio * n)` is
/// reached.
pub fn split_indices(
    n: usize,
    strata: Option<&[Zone]>,
    config: &SplitConfig,
) -> Result<SplitIndices, DataError> {
    config.validate()?;
    if n == 0 {
        return Err(DataError::EmptyDataset);
    }
    let target = train_count(config.train_ratio, n);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut train: Vec<usize> = match strata {
        None => {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            perm.truncate(target);
            perm
        }
        Some(labels) => {
            if labels.len() != n {
                return Err(DataError::InvalidSplit(format!(
                    "{} labels for {n} rows",
                    labels.len()
                )));
            }
            let mut groups: Vec<Vec<usize>> = vec![Vec::new(); Zone::COUNT];
            for (i, z) in labels.iter().enumerate() {
                groups[z.index()].push(i);
            }
            for g in &mut groups {
                g.shuffle(&mut rng);
            }
            let mut take: Vec<usize> = groups
                .iter()
                .map(|g| train_count(config.train_ratio, g.len()))
                .collect();
            let mut remaining = target - take.iter().sum::<usize>();
            let mut order: Vec<(f64, usize)> = groups
                .iter()
                .enumerate()
                .map(|(z, g)| (config.train_ratio * g.len() as f64 - take[z] as f64, z))
                .collect();
            order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            for &(_, z) in &order {
                if remaining == 0 {
                    break;
                }
                if take[z] < groups[z].len() {
                    take[z] += 1;
                    remaining -= 1;
                }
            }
            groups
                .iter()
                .zip(&take)
                .flat_map(|(g, &k)| g[..k].iter().copied())
                .collect()
        }
    };
    train.sort_unstable();
    let mut in_train = vec![false; n];
    for &i in &train {
        in_train[i] = true;
    }
    let test = (0..n).filter(|&i| !in_train[i]).collect();
    Ok(SplitIndices { train, test })
}

/// Splits a dataset into `(train, test)`; each side keeps source row order.
pub fn split_data<R: Record>(
    dataset: &Dataset<R>,
    config: &SplitConfig,
) -> Result<(Dataset<R>, Dataset<R>), DataError> {
    let idx = split_dataset_indices(dataset, config)?;
    Ok((
        dataset.select(&idx.train, "train"),
        dataset.select(&idx.test, "test"),
    ))
}

/// The index form of [`split_data`].
pub fn split_dataset_indices<R: Record>(
    dataset: &Dataset<R>,
    config: &SplitConfig,
) -> Result<SplitIndices, DataError> {
    if dataset.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    let strata = if config.stratified {
        let labels: Option<Vec<Zone>> = dataset.rows.iter().map(Record::stratum).collect();
        Some(labels.ok_or_else(|| {
            DataError::InvalidSplit("stratified split requested for unlabeled records".into())
        })?)
    } else {
        None
    };
    split_indices(dataset.len(), strata.as_deref(), config)
}
