//! Skip-gram embeddings trained with negative sampling.
//!
//! Each (center, context) pair inside a randomly shrunk window is a positive
//! example for the logistic loss on `input[center] . output[context]`;
//! `negatives` words drawn from the unigram distribution raised to 0.75 are
//! negative examples. The learning rate decays linearly over all epochs.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::EmbeddingTable;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr: f32,
    pub min_count: usize,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dim: 200,
            window: 5,
            negatives: 5,
            epochs: 5,
            lr: 0.025,
            min_count: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TrainError {
    #[error("the training corpus has no tokens that pass the min-count filter")]
    EmptyCorpus,
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(&'static str),
}

const MIN_LR_FRACTION: f32 = 1e-4;

fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

struct NegativeTable {
    cumulative: Vec<f64>,
}

impl NegativeTable {
    fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(0.75);
                acc
            })
            .collect();
        NegativeTable { cumulative }
    }

    fn sample(&self, rng: &mut impl Rng) -> usize {
        let total = *self.cumulative.last().unwrap();
        let x = rng.gen::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= x)
            .min(self.cumulative.len() - 1)
    }
}

/// Trains word vectors on tokenized sentences. Deterministic for a given seed.
pub fn train_embeddings(
    corpus: &[Vec<String>],
    config: &SkipGramConfig,
) -> Result<EmbeddingTable, TrainError> {
    if config.dim == 0 {
        return Err(TrainError::InvalidHyperparameter("dim must be at least 1"));
    }
    if config.window == 0 {
        return Err(TrainError::InvalidHyperparameter("window must be at least 1"));
    }

    let mut freq: HashMap<&str, u64> = HashMap::new();
    for token in corpus.iter().flatten() {
        *freq.entry(token.as_str()).or_default() += 1;
    }
    let mut vocab: Vec<(&str, u64)> = freq
        .into_iter()
        .filter(|&(_, c)| c as usize >= config.min_count.max(1))
        .collect();
    if vocab.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let index: HashMap<&str, usize> = vocab.iter().enumerate().map(|(i, (w, _))| (*w, i)).collect();
    let sentences: Vec<Vec<usize>> = corpus
        .iter()
        .map(|s| s.iter().filter_map(|t| index.get(t.as_str()).copied()).collect())
        .collect();
    let counts: Vec<u64> = vocab.iter().map(|(_, c)| *c).collect();
    let table = NegativeTable::new(&counts);

    let dim = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let bound = 0.5 / dim as f32;
    let mut input: Vec<f32> = (0..vocab.len() * dim)
        .map(|_| rng.gen_range(-bound..bound))
        .collect();
    let mut output = vec![0.0f32; vocab.len() * dim];
    let mut grad = vec![0.0f32; dim];

    let tokens_per_epoch: usize = sentences.iter().map(Vec::len).sum();
    let total = (tokens_per_epoch * config.epochs).max(1) as f32;
    let mut processed = 0usize;

    for _ in 0..config.epochs {
        for sentence in &sentences {
            for (pos, &center) in sentence.iter().enumerate() {
                let lr = config.lr * (1.0 - processed as f32 / total).max(MIN_LR_FRACTION);
                processed += 1;
                let span = config.window - rng.gen_range(0..config.window);
                let lo = pos.saturating_sub(span);
                let hi = (pos + span + 1).min(sentence.len());
                for (ctx_pos, &context) in sentence.iter().enumerate().take(hi).skip(lo) {
                    if ctx_pos == pos {
                        continue;
                    }
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let center_vec = &input[center * dim..(center + 1) * dim];
                    update(center_vec, &mut output, &mut grad, context, 1.0, lr, dim);
                    for _ in 0..config.negatives {
                        let neg = table.sample(&mut rng);
                        if neg == context {
                            continue;
                        }
                        update(center_vec, &mut output, &mut grad, neg, 0.0, lr, dim);
                    }
                    input[center * dim..(center + 1) * dim]
                        .iter_mut()
                        .zip(&grad)
                        .for_each(|(w, g)| *w += g);
                }
            }
        }
    }

    let mut result = EmbeddingTable::new(dim);
    for (i, (word, _)) in vocab.iter().enumerate() {
        result.insert(*word, &input[i * dim..(i + 1) * dim]);
    }
    Ok(result)
}

/// One logistic-loss step for `target`; accumulates the input gradient.
fn update(
    center: &[f32],
    output: &mut [f32],
    grad: &mut [f32],
    target: usize,
    label: f32,
    lr: f32,
    dim: usize,
) {
    let out = &mut output[target * dim..(target + 1) * dim];
    let dot: f32 = center.iter().zip(out.iter()).map(|(a, b)| a * b).sum();
    let g = (label - sigmoid(dot)) * lr;
    for ((o, c), acc) in out.iter_mut().zip(center).zip(grad.iter_mut()) {
        *acc += g * *o;
        *o += g * c;
    }
}
