//! ε-insensitive support vector regression in the primal.
//!
//! The objective ½θᵀQθ + C·Σ max(0, |yᵢ − fᵢ| − ε) is minimized over the
//! parameter vector θ with f = Φθ. For the linear kernel θ = (w, b) and
//! Φ = [X 1]; for the RBF kernel θ = (α, b) in the representer form and
//! Φ = [K 1], Q = K. Each step solves the one-dimensional problem along a
//! coordinate or a random direction exactly, and is kept only if the
//! objective does not increase.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_targets, check_training, FeatureMatrix, LearnerError, Targets};

/// Largest training set accepted for the dense RBF kernel matrix.
pub const MAX_RBF_ROWS: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "type")]
pub enum Kernel {
    Linear,
    /// `gamma: None` resolves to 1/p at fit time.
    Rbf { gamma: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub kernel: Kernel,
    pub max_sweeps: usize,
    /// Random-direction line searches added to each coordinate sweep.
    pub directions_per_sweep: usize,
    pub seed: u64,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            c: 1.0,
            epsilon: 0.1,
            kernel: Kernel::Rbf { gamma: None },
            max_sweeps: 100,
            directions_per_sweep: 4,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum Predictor {
    Linear { w: Vec<f64> },
    Rbf { gamma: f64, support: FeatureMatrix, alpha: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvrModel {
    predictor: Predictor,
    pub bias: f64,
    /// Objective at the median-constant start and after every line search.
    pub objective_history: Vec<f64>,
}

fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Minimizer of ½aδ² + gδ + C·Σ max(0, |rᵢ − kᵢδ| − ε) for a ≥ 0.
pub(crate) fn line_minimum(a: f64, g: f64, r: &[f64], k: &[f64], c: f64, eps: f64) -> f64 {
    // The derivative is aδ + g + C·S(δ); S starts at −Σ|kᵢ| and rises by |kᵢ|
    // at each of the two tube-boundary crossings of row i.
    let mut breaks: Vec<(f64, f64)> = Vec::with_capacity(2 * r.len());
    let mut slope = 0.0;
    for (&ri, &ki) in r.iter().zip(k) {
        if ki != 0.0 {
            let w = ki.abs();
            slope -= w;
            breaks.push(((ri - eps) / ki, w));
            breaks.push(((ri + eps) / ki, w));
        }
    }
    if breaks.is_empty() {
        return if a > 0.0 { -g / a } else { 0.0 };
    }
    breaks.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut lower = f64::NEG_INFINITY;
    for (at, w) in breaks {
        if a > 0.0 {
            let stationary = -(g + c * slope) / a;
            if stationary <= at {
                return stationary.max(lower);
            }
        } else if g + c * slope >= 0.0 {
            return if lower.is_finite() { lower } else { at };
        }
        slope += w;
        lower = at;
    }
    if a > 0.0 {
        (-(g + c * slope) / a).max(lower)
    } else {
        lower
    }
}

enum Direction {
    Axis(usize),
    Dense(Vec<f64>),
}

struct Problem<'a> {
    phi: Vec<f64>,
    m: usize,
    q: Vec<f64>,
    y: &'a [f64],
    c: f64,
    eps: f64,
}

impl Problem<'_> {
    fn phi_row(&self, i: usize) -> &[f64] {
        &self.phi[i * self.m..(i + 1) * self.m]
    }

    fn q_row(&self, j: usize) -> &[f64] {
        &self.q[j * self.m..(j + 1) * self.m]
    }

    fn loss(&self, f: &[f64]) -> f64 {
        self.c
            * self
                .y
                .iter()
                .zip(f)
                .map(|(y, f)| ((y - f).abs() - self.eps).max(0.0))
                .sum::<f64>()
    }
}

pub fn fit_svr(x: &FeatureMatrix, y: &[f64], params: &SvrParams) -> Result<SvrModel, LearnerError> {
    check_training(x, y.len())?;
    check_targets(&Targets::Values(y))?;
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(LearnerError::InvalidParameter(format!("C = {} must be > 0", params.c)));
    }
    if !(params.epsilon >= 0.0 && params.epsilon.is_finite()) {
        return Err(LearnerError::InvalidParameter(format!(
            "epsilon = {} must be >= 0",
            params.epsilon
        )));
    }
    let (n, p) = (x.n_rows(), x.n_cols());
    let gamma = match params.kernel {
        Kernel::Linear => None,
        Kernel::Rbf { gamma } => {
            let g = gamma.unwrap_or(1.0 / p as f64);
            if !(g > 0.0 && g.is_finite()) {
                return Err(LearnerError::InvalidParameter(format!("gamma = {g} must be > 0")));
            }
            if n > MAX_RBF_ROWS {
                return Err(LearnerError::InvalidParameter(format!(
                    "rbf kernel supports at most {MAX_RBF_ROWS} training rows, got {n}"
                )));
            }
            Some(g)
        }
    };
    let m = match gamma {
        None => p + 1,
        Some(_) => n + 1,
    };
    let mut phi = vec![0.0; n * m];
    let mut q = vec![0.0; m * m];
    for i in 0..n {
        let row = &mut phi[i * m..(i + 1) * m];
        match gamma {
            None => row[..p].copy_from_slice(x.row(i)),
            Some(g) => {
                for (j, cell) in row[..n].iter_mut().enumerate() {
                    *cell = rbf(g, x.row(i), x.row(j));
                }
            }
        }
        row[m - 1] = 1.0;
    }
    match gamma {
        None => {
            for j in 0..p {
                q[j * m + j] = 1.0;
            }
        }
        Some(_) => {
            for i in 0..n {
                for j in 0..n {
                    q[i * m + j] = phi[i * m + j];
                }
            }
        }
    }
    let problem = Problem {
        phi,
        m,
        q,
        y,
        c: params.c,
        eps: params.epsilon,
    };

    // Start from the constant predictor at the target median.
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let mut theta = vec![0.0; m];
    theta[m - 1] = median;
    let mut f = vec![median; n];
    let mut q_theta = vec![0.0; m];
    let mut reg = 0.0;
    let mut objective = problem.loss(&f);
    let mut history = vec![objective];
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut coords: Vec<usize> = (0..m).collect();
    let mut residual = vec![0.0; n];
    let mut k = vec![0.0; n];

    for _sweep in 0..params.max_sweeps {
        let start = objective;
        coords.shuffle(&mut rng);
        let mut directions: Vec<Direction> = coords.iter().map(|&j| Direction::Axis(j)).collect();
        for _ in 0..params.directions_per_sweep {
            directions.push(Direction::Dense((0..m).map(|_| StandardNormal.sample(&mut rng)).collect()));
        }
        for d in directions {
            // Q is symmetric, so Qd for an axis direction is row j of Q.
            let qd: Vec<f64> = match &d {
                Direction::Axis(j) => problem.q_row(*j).to_vec(),
                Direction::Dense(v) => (0..m)
                    .map(|j| problem.q_row(j).iter().zip(v).map(|(a, b)| a * b).sum())
                    .collect(),
            };
            let (a, g) = match &d {
                Direction::Axis(j) => (qd[*j].max(0.0), q_theta[*j]),
                Direction::Dense(v) => (
                    v.iter().zip(&qd).map(|(a, b)| a * b).sum::<f64>().max(0.0),
                    v.iter().zip(&q_theta).map(|(a, b)| a * b).sum(),
                ),
            };
            for i in 0..n {
                let row = problem.phi_row(i);
                k[i] = match &d {
                    Direction::Axis(j) => row[*j],
                    Direction::Dense(v) => row.iter().zip(v).map(|(a, b)| a * b).sum(),
                };
                residual[i] = y[i] - f[i];
            }
            let delta = line_minimum(a, g, &residual, &k, problem.c, problem.eps);
            if !delta.is_finite() || delta == 0.0 {
                history.push(objective);
                continue;
            }
            let new_f: Vec<f64> = f.iter().zip(&k).map(|(f, k)| f + delta * k).collect();
            let new_reg = reg + delta * g + 0.5 * delta * delta * a;
            let candidate = new_reg + problem.loss(&new_f);
            if !candidate.is_finite() {
                return Err(LearnerError::Diverged {
                    epoch: history.len(),
                    detail: "non-finite objective".into(),
                });
            }
            if candidate <= objective {
                match &d {
                    Direction::Axis(j) => theta[*j] += delta,
                    Direction::Dense(v) => {
                        for (t, dj) in theta.iter_mut().zip(v) {
                            *t += delta * dj;
                        }
                    }
                }
                for (qt, qdj) in q_theta.iter_mut().zip(&qd) {
                    *qt += delta * qdj;
                }
                f = new_f;
                reg = new_reg;
                objective = candidate;
            }
            history.push(objective);
        }
        if start - objective <= 1e-12 * start.max(1.0) {
            break;
        }
    }

    let bias = theta[m - 1];
    theta.truncate(m - 1);
    let predictor = match gamma {
        None => Predictor::Linear { w: theta },
        Some(gamma) => Predictor::Rbf {
            gamma,
            support: x.clone(),
            alpha: theta,
        },
    };
    Ok(SvrModel {
        predictor,
        bias,
        objective_history: history,
    })
}

impl SvrModel {
    pub fn predict(&self, query: &[f64]) -> f64 {
        self.bias
            + match &self.predictor {
                Predictor::Linear { w } => w.iter().zip(query).map(|(w, v)| w * v).sum::<f64>(),
                Predictor::Rbf {
                    gamma,
                    support,
                    alpha,
                } => alpha
                    .iter()
                    .enumerate()
                    .map(|(j, a)| a * rbf(*gamma, support.row(j), query))
                    .sum::<f64>(),
            }
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective_history.last().unwrap_or(&f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn objective_at(a: f64, g: f64, r: &[f64], k: &[f64], c: f64, eps: f64, d: f64) -> f64 {
        0.5 * a * d * d
            + g * d
            + c * r
                .iter()
                .zip(k)
                .map(|(r, k)| ((r - k * d).abs() - eps).max(0.0))
                .sum::<f64>()
    }

    proptest! {
        #[test]
        fn line_minimum_beats_a_dense_scan(
            a in 0.0f64..3.0,
            g in -5.0f64..5.0,
            rk in prop::collection::vec((-5.0f64..5.0, -2.0f64..2.0), 1..12),
            c in 0.1f64..5.0,
            eps in 0.0f64..1.0,
        ) {
            let (r, k): (Vec<f64>, Vec<f64>) = rk.into_iter().unzip();
            let d = line_minimum(a, g, &r, &k, c, eps);
            let best = objective_at(a, g, &r, &k, c, eps, d);
            for step in -400..=400 {
                let probe = step as f64 * 0.05;
                prop_assert!(best <= objective_at(a, g, &r, &k, c, eps, probe) + 1e-9);
            }
        }
    }

    #[test]
    fn constant_targets_inside_the_tube() {
        let x = FeatureMatrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        let y = [5.0, 5.05, 4.95, 5.0];
        for kernel in [Kernel::Linear, Kernel::Rbf { gamma: None }] {
            let params = SvrParams {
                kernel,
                ..SvrParams::default()
            };
            let m = fit_svr(&x, &y, &params).unwrap();
            let zero_predictor: f64 = y.iter().map(|v| (v - params.epsilon).max(0.0)).sum();
            assert!(m.final_objective() <= zero_predictor);
            assert!(m.final_objective() < 1e-9, "{:?}: {}", kernel, m.final_objective());
        }
    }

    #[test]
    fn objective_non_increasing() {
        let rows: Vec<[f64; 2]> = (0..30).map(|i| [(i as f64 * 0.37).sin(), (i % 7) as f64 / 3.0]).collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = rows.iter().map(|r| 3.0 * r[0] - r[1] * r[1]).collect();
        for kernel in [Kernel::Linear, Kernel::Rbf { gamma: Some(0.5) }] {
            let params = SvrParams {
                kernel,
                ..SvrParams::default()
            };
            let m = fit_svr(&x, &y, &params).unwrap();
            for w in m.objective_history.windows(2) {
                assert!(w[1] <= w[0]);
            }
        }
    }

    #[test]
    fn linear_kernel_recovers_a_line() {
        let train: Vec<[f64; 1]> = (0..20).map(|i| [i as f64 / 19.0 * 2.0 - 1.0]).collect();
        let x = FeatureMatrix::from_rows(&train).unwrap();
        let y: Vec<f64> = train.iter().map(|r| 2.0 * r[0] + 1.0).collect();
        let params = SvrParams {
            c: 10.0,
            kernel: Kernel::Linear,
            ..SvrParams::default()
        };
        let m = fit_svr(&x, &y, &params).unwrap();
        let test: Vec<f64> = (0..50).map(|i| -1.0 + i as f64 / 25.0).collect();
        let rmse = (test.iter().map(|&v| (m.predict(&[v]) - (2.0 * v + 1.0)).powi(2)).sum::<f64>()
            / test.len() as f64)
            .sqrt();
        assert!(rmse < params.epsilon, "rmse {rmse}");
    }

    #[test]
    fn invalid_parameters() {
        let x = FeatureMatrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let bad = [
            SvrParams { c: 0.0, ..SvrParams::default() },
            SvrParams { epsilon: -0.1, ..SvrParams::default() },
            SvrParams { kernel: Kernel::Rbf { gamma: Some(0.0) }, ..SvrParams::default() },
        ];
        for p in bad {
            assert!(fit_svr(&x, &[0.0, 1.0], &p).is_err());
        }
    }
}
