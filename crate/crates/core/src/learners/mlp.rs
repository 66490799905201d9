//! Fully connected network: rectifier hidden layers, two-way softmax output,
//! cross-entropy loss, mini-batch gradient descent.
//!
//! Parameters live in one flat vector. Layer `l` stores its `out x in` weight
//! matrix row-major, followed by its `out` biases.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Classifier, Dataset, Label, LearnError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: vec![100, 25],
            epochs: 50,
            lr: 0.05,
            batch_size: 32,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct LayerShape {
    weights: usize,
    biases: usize,
    inputs: usize,
    outputs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

impl Mlp {
    /// He-uniform weights, zero biases.
    pub fn new(inputs: usize, hidden: &[usize], seed: u64) -> Self {
        let mut sizes = vec![inputs];
        sizes.extend_from_slice(hidden);
        sizes.push(2);
        let total: usize = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        let mut mlp = Mlp {
            sizes,
            params: vec![0.0; total],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for shape in mlp.shapes() {
            let bound = (6.0 / shape.inputs.max(1) as f64).sqrt();
            for w in &mut mlp.params[shape.weights..shape.biases] {
                *w = rng.gen_range(-bound..bound);
            }
        }
        mlp
    }

    fn shapes(&self) -> Vec<LayerShape> {
        let mut offset = 0;
        self.sizes
            .windows(2)
            .map(|w| {
                let shape = LayerShape {
                    weights: offset,
                    biases: offset + w[0] * w[1],
                    inputs: w[0],
                    outputs: w[1],
                };
                offset = shape.biases + w[1];
                shape
            })
            .collect()
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Activations of every layer, input first, output logits last.
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let shapes = self.shapes();
        let mut acts = vec![x.to_vec()];
        for (l, s) in shapes.iter().enumerate() {
            let prev = &acts[l];
            let w = &self.params[s.weights..s.biases];
            let b = &self.params[s.biases..s.biases + s.outputs];
            let last = l + 1 == shapes.len();
            let next: Vec<f64> = (0..s.outputs)
                .map(|o| {
                    let z = w[o * s.inputs..(o + 1) * s.inputs]
                        .iter()
                        .zip(prev)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                        + b[o];
                    if last {
                        z
                    } else {
                        relu(z)
                    }
                })
                .collect();
            acts.push(next);
        }
        acts
    }

    /// Class probabilities `[negative, positive]`.
    pub fn probabilities(&self, x: &[f64]) -> [f64; 2] {
        let acts = self.forward(x);
        let z = acts.last().unwrap();
        let m = z[0].max(z[1]);
        let e = [(z[0] - m).exp(), (z[1] - m).exp()];
        let s = e[0] + e[1];
        [e[0] / s, e[1] / s]
    }

    fn sample_loss(logits: &[f64], label: Label) -> f64 {
        let m = logits[0].max(logits[1]);
        let lse = m + ((logits[0] - m).exp() + (logits[1] - m).exp()).ln();
        lse - logits[label.index()]
    }

    /// Mean cross-entropy over the whole dataset.
    pub fn loss(&self, data: &Dataset) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        (0..data.len())
            .map(|i| Self::sample_loss(self.forward(data.row(i)).last().unwrap(), data.label(i)))
            .sum::<f64>()
            / data.len() as f64
    }

    /// Mean loss over `indices` and its gradient with respect to every parameter.
    pub fn loss_and_gradient(&self, data: &Dataset, indices: &[usize]) -> (f64, Vec<f64>) {
        let shapes = self.shapes();
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        for &i in indices {
            let acts = self.forward(data.row(i));
            let logits = acts.last().unwrap();
            let label = data.label(i);
            loss += Self::sample_loss(logits, label);
            let m = logits[0].max(logits[1]);
            let e = [(logits[0] - m).exp(), (logits[1] - m).exp()];
            let s = e[0] + e[1];
            let mut delta = vec![e[0] / s, e[1] / s];
            delta[label.index()] -= 1.0;
            for (l, sh) in shapes.iter().enumerate().rev() {
                let input = &acts[l];
                for o in 0..sh.outputs {
                    let row = sh.weights + o * sh.inputs;
                    grad[row..row + sh.inputs]
                        .iter_mut()
                        .zip(input)
                        .for_each(|(g, a)| *g += delta[o] * a);
                    grad[sh.biases + o] += delta[o];
                }
                if l == 0 {
                    break;
                }
                let w = &self.params[sh.weights..sh.biases];
                delta = (0..sh.inputs)
                    .map(|k| {
                        if input[k] > 0.0 {
                            (0..sh.outputs)
                                .map(|o| w[o * sh.inputs + k] * delta[o])
                                .sum()
                        } else {
                            0.0
                        }
                    })
                    .collect();
            }
        }
        let n = indices.len().max(1) as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        (loss / n, grad)
    }
}

impl Classifier for Mlp {
    fn predict(&self, x: &[f64]) -> Label {
        let p = self.probabilities(x);
        if p[1] >= p[0] {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

pub fn train_mlp(train: &Dataset, params: &MlpParams, seed: u64) -> Result<Mlp, LearnError> {
    train_mlp_with_history(train, params, seed).map(|(m, _)| m)
}

/// Also returns the full-training-set loss before training and after each epoch.
pub fn train_mlp_with_history(
    train: &Dataset,
    params: &MlpParams,
    seed: u64,
) -> Result<(Mlp, Vec<f64>), LearnError> {
    train.check_trainable()?;
    if params.batch_size == 0 || !(params.lr > 0.0) || params.hidden.contains(&0) {
        return Err(LearnError::InvalidHyperparameter(
            "batch_size, lr and hidden sizes must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mlp = Mlp::new(train.dim(), &params.hidden, rng.gen());
    let mut history = vec![mlp.loss(train)];
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        for (batch, chunk) in order.chunks(params.batch_size).enumerate() {
            let (loss, grad) = mlp.loss_and_gradient(train, chunk);
            if !loss.is_finite() {
                let max_param = mlp.params.iter().fold(0.0f64, |m, p| m.max(p.abs()));
                return Err(LearnError::NonfiniteLoss {
                    epoch,
                    batch,
                    loss,
                    lr: params.lr,
                    max_param,
                });
            }
            mlp.params
                .iter_mut()
                .zip(&grad)
                .for_each(|(p, g)| *p -= params.lr * g);
        }
        history.push(mlp.loss(train));
    }
    Ok((mlp, history))
}
