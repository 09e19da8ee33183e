//! Fully connected feed-forward networks trained by mini-batch gradient
//! descent.
//!
//! Regression uses one linear output on targets min-max scaled to [0, 1] and
//! the loss ½(o − t)². Classification uses a softmax over the four zones and
//! cross-entropy. Losses are averaged over the batch.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    check_targets, check_training, FeatureMatrix, LearnerError, Prediction,
    PredictionWithConfidence, Targets, Task,
};
use crate::data::Zone;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Relu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub epochs: usize,
    pub rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl MlpParams {
    /// One hidden layer of 10 sigmoid units.
    pub fn ann() -> MlpParams {
        MlpParams {
            hidden: vec![10],
            activation: Activation::Sigmoid,
            epochs: 300,
            rate: 0.5,
            batch_size: 16,
            seed: 42,
        }
    }

    /// Two hidden layers of 50 rectified linear units.
    pub fn deep_learning() -> MlpParams {
        MlpParams {
            hidden: vec![50, 50],
            activation: Activation::Relu,
            epochs: 300,
            rate: 0.05,
            batch_size: 16,
            seed: 42,
        }
    }

    fn validate(&self) -> Result<(), LearnerError> {
        if self.hidden.contains(&0) {
            return Err(LearnerError::InvalidParameter("layer sizes must be >= 1".into()));
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(LearnerError::InvalidParameter(format!(
                "learning rate {} must be positive",
                self.rate
            )));
        }
        if self.batch_size == 0 {
            return Err(LearnerError::InvalidParameter("batch size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Encoded network targets: scaled values or class indices.
#[derive(Debug, Clone, PartialEq)]
pub enum NetTargets {
    Values(Vec<f64>),
    Classes(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    inputs: usize,
    outputs: usize,
    /// Row-major `outputs × inputs`.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    layers: Vec<Layer>,
    activation: Activation,
    task: Task,
}

impl Network {
    /// Uniform ±1/√fan_in initialization.
    pub fn new(inputs: usize, hidden: &[usize], activation: Activation, task: Task, seed: u64) -> Network {
        let outputs = match task {
            Task::Regression => 1,
            Task::Classification => Zone::COUNT,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sizes = vec![inputs];
        sizes.extend_from_slice(hidden);
        sizes.push(outputs);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                let weights = (0..w[0] * w[1]).map(|_| rng.random_range(-bound..bound)).collect();
                let biases = (0..w[1]).map(|_| rng.random_range(-bound..bound)).collect();
                Layer {
                    inputs: w[0],
                    outputs: w[1],
                    weights,
                    biases,
                }
            })
            .collect();
        Network {
            layers,
            activation,
            task,
        }
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Weights then biases of each layer, input side first.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_params());
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[at..at + nw]);
            at += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&flat[at..at + nb]);
            at += nb;
        }
    }

    /// Activations of every layer; the last entry is the raw output
    /// (linear for regression, logits for classification).
    fn forward(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![input.to_vec()];
        let last = self.layers.len() - 1;
        for (k, l) in self.layers.iter().enumerate() {
            let prev = &acts[k];
            let out: Vec<f64> = (0..l.outputs)
                .map(|j| {
                    let row = &l.weights[j * l.inputs..(j + 1) * l.inputs];
                    let z = l.biases[j] + row.iter().zip(prev).map(|(w, a)| w * a).sum::<f64>();
                    if k == last {
                        z
                    } else {
                        self.activation.apply(z)
                    }
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    pub fn output(&self, input: &[f64]) -> Vec<f64> {
        let raw = self.forward(input).pop().unwrap_or_default();
        match self.task {
            Task::Regression => raw,
            Task::Classification => softmax(&raw),
        }
    }

    fn sample_loss(&self, out: &[f64], target: SampleTarget) -> (f64, Vec<f64>) {
        match target {
            SampleTarget::Value(t) => {
                let d = out[0] - t;
                (0.5 * d * d, vec![d])
            }
            SampleTarget::Class(c) => {
                let p = softmax(out);
                let max = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + out.iter().map(|o| (o - max).exp()).sum::<f64>().ln();
                let mut delta = p;
                delta[c] -= 1.0;
                (lse - out[c], delta)
            }
        }
    }

    /// Mean loss over `rows` and its gradient in [`Network::params`] order.
    pub fn loss_and_gradient(&self, x: &FeatureMatrix, rows: &[usize], targets: &NetTargets) -> (f64, Vec<f64>) {
        let mut grads: Vec<(Vec<f64>, Vec<f64>)> = self
            .layers
            .iter()
            .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.biases.len()]))
            .collect();
        let mut total = 0.0;
        let scale = 1.0 / rows.len() as f64;
        for &i in rows {
            let acts = self.forward(x.row(i));
            let (loss, mut delta) = self.sample_loss(acts.last().unwrap(), SampleTarget::of(targets, i));
            total += loss;
            for k in (0..self.layers.len()).rev() {
                let l = &self.layers[k];
                let input = &acts[k];
                let (gw, gb) = &mut grads[k];
                for j in 0..l.outputs {
                    let d = delta[j] * scale;
                    gb[j] += d;
                    for (g, a) in gw[j * l.inputs..(j + 1) * l.inputs].iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
                if k > 0 {
                    delta = (0..l.inputs)
                        .map(|m| {
                            let back: f64 = (0..l.outputs).map(|j| l.weights[j * l.inputs + m] * delta[j]).sum();
                            back * self.activation.derivative_from_output(input[m])
                        })
                        .collect();
                }
            }
        }
        let mut flat = Vec::with_capacity(self.n_params());
        for (gw, gb) in grads {
            flat.extend(gw);
            flat.extend(gb);
        }
        (total * scale, flat)
    }

    pub fn loss(&self, x: &FeatureMatrix, rows: &[usize], targets: &NetTargets) -> f64 {
        rows.iter()
            .map(|&i| {
                let acts = self.forward(x.row(i));
                self.sample_loss(acts.last().unwrap(), SampleTarget::of(targets, i)).0
            })
            .sum::<f64>()
            / rows.len() as f64
    }

    /// One gradient descent step on `rows`; returns the pre-step loss.
    pub fn step(&mut self, x: &FeatureMatrix, rows: &[usize], targets: &NetTargets, rate: f64) -> f64 {
        let (loss, grad) = self.loss_and_gradient(x, rows, targets);
        let mut params = self.params();
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= rate * g;
        }
        self.set_params(&params);
        loss
    }
}

#[derive(Clone, Copy)]
enum SampleTarget {
    Value(f64),
    Class(usize),
}

impl SampleTarget {
    fn of(targets: &NetTargets, i: usize) -> SampleTarget {
        match targets {
            NetTargets::Values(v) => SampleTarget::Value(v[i]),
            NetTargets::Classes(c) => SampleTarget::Class(c[i]),
        }
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpModel {
    pub network: Network,
    /// Regression target range used for the [0, 1] scaling.
    target_min: f64,
    target_span: f64,
    pub loss_history: Vec<f64>,
}

pub fn fit_mlp(x: &FeatureMatrix, targets: Targets<'_>, params: &MlpParams) -> Result<MlpModel, LearnerError> {
    check_training(x, targets.len())?;
    check_targets(&targets)?;
    params.validate()?;
    let task = targets.task();
    let (encoded, target_min, target_span) = match targets {
        Targets::Values(v) => {
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let span = if hi > lo { hi - lo } else { 1.0 };
            (NetTargets::Values(v.iter().map(|t| (t - lo) / span).collect()), lo, span)
        }
        Targets::Classes(c) => (NetTargets::Classes(c.iter().map(|z| z.index()).collect()), 0.0, 1.0),
    };
    let mut network = Network::new(x.n_cols(), &params.hidden, params.activation, task, params.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x5DEE_CE66_D1CE_4E5B);
    let mut order: Vec<usize> = (0..x.n_rows()).collect();
    let mut loss_history = Vec::with_capacity(params.epochs);
    for epoch in 1..=params.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(params.batch_size) {
            epoch_loss += network.step(x, batch, &encoded, params.rate) * batch.len() as f64;
        }
        epoch_loss /= x.n_rows() as f64;
        if !epoch_loss.is_finite() || network.params().iter().any(|p| !p.is_finite()) {
            return Err(LearnerError::Diverged {
                epoch,
                detail: "non-finite loss".into(),
            });
        }
        loss_history.push(epoch_loss);
    }
    Ok(MlpModel {
        network,
        target_min,
        target_span,
        loss_history,
    })
}

impl MlpModel {
    pub fn predict(&self, query: &[f64]) -> Prediction {
        let out = self.network.output(query);
        match self.network.task {
            Task::Regression => Prediction::Value(self.target_min + self.target_span * out[0]),
            Task::Classification => {
                let mut scores = [0.0; Zone::COUNT];
                scores.copy_from_slice(&out);
                Prediction::Class(PredictionWithConfidence::from_scores(scores))
            }
        }
    }
}
