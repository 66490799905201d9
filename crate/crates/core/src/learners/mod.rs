//! Binary sentiment classifiers, metrics and the experiment harness.
//!
//! Every trainer is a pure function of its data, hyperparameters and seed.

pub mod experiment;
pub mod forest;
pub mod knn;
pub mod linear_svm;
pub mod metrics;
pub mod mlp;
pub mod rbf_svm;

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use forest::{train_random_forest, DecisionTree, RandomForest, RandomForestParams, TreeParams};
pub use knn::{knn_predict, nearest, Knn, KnnParams};
pub use linear_svm::{train_linear_svm, LinearSvm, LinearSvmParams};
pub use metrics::{evaluate, evaluate_model, ConfusionMatrix, Metrics};
pub use mlp::{train_mlp, Mlp, MlpParams};
pub use rbf_svm::{train_rbf_svm, RbfSvm, RbfSvmParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "neg")]
    Negative,
    #[serde(rename = "pos")]
    Positive,
}

impl Label {
    pub fn flip(self) -> Label {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }

    /// `+1.0` for positive, `-1.0` for negative.
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn from_sign(value: f64) -> Label {
        if value >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    /// Class index used by the softmax output: negative 0, positive 1.
    pub fn index(self) -> usize {
        match self {
            Label::Negative => 0,
            Label::Positive => 1,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Positive => "pos",
            Label::Negative => "neg",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("row {row} has {found} features, expected {expected}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("{features} rows but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch} (lr {lr}, max |param| {max_param})")]
    NonfiniteLoss {
        epoch: usize,
        batch: usize,
        loss: f64,
        lr: f64,
        max_param: f64,
    },
}

/// Feature rows with one label each. All rows share one length.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Vec<Vec<f64>>,
    labels: Vec<Label>,
    dim: usize,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self, LearnError> {
        if features.len() != labels.len() {
            return Err(LearnError::LengthMismatch {
                features: features.len(),
                labels: labels.len(),
            });
        }
        let dim = features.first().map_or(0, Vec::len);
        if let Some((row, r)) = features.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(LearnError::DimensionMismatch {
                row,
                expected: dim,
                found: r.len(),
            });
        }
        Ok(Dataset {
            features,
            labels,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i]
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            dim: self.dim,
        }
    }

    pub fn with_flipped_labels(&self) -> Dataset {
        Dataset {
            labels: self.labels.iter().map(|l| l.flip()).collect(),
            ..self.clone()
        }
    }

    /// The label shared by every row, if there is exactly one.
    pub fn single_class(&self) -> Option<Label> {
        let first = *self.labels.first()?;
        self.labels.iter().all(|&l| l == first).then_some(first)
    }

    /// Positive count, negative count.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l == Label::Positive).count();
        (pos, self.len() - pos)
    }

    pub(crate) fn check_trainable(&self) -> Result<(), LearnError> {
        if self.is_empty() {
            Err(LearnError::EmptyTrainingSet)
        } else {
            Ok(())
        }
    }

    /// Z-scores every column with statistics from this dataset. Constant
    /// columns are only centred.
    pub fn standardizer(&self) -> Standardizer {
        let n = self.len().max(1) as f64;
        let mut mean = vec![0.0; self.dim];
        for row in &self.features {
            mean.iter_mut().zip(row).for_each(|(m, x)| *m += x / n);
        }
        let mut var = vec![0.0; self.dim];
        for row in &self.features {
            var.iter_mut()
                .zip(row.iter().zip(&mean))
                .for_each(|(v, (x, m))| *v += (x - m) * (x - m) / n);
        }
        let scale = var
            .iter()
            .map(|v| if *v > 1e-24 { 1.0 / v.sqrt() } else { 1.0 })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn map_features(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Dataset {
        let features: Vec<Vec<f64>> = self.features.iter().map(|r| f(r)).collect();
        let dim = features.first().map_or(self.dim, Vec::len);
        Dataset {
            features,
            labels: self.labels.clone(),
            dim,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(x, (m, s))| (x - m) * s)
            .collect()
    }
}

/// Disjoint train/test index sets covering a dataset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified split: each class contributes `round(test_fraction * class size)`
/// rows to the test set. Both index lists come back sorted.
pub fn stratified_split(labels: &[Label], test_fraction: f64, seed: u64) -> Split {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [Label::Negative, Label::Positive] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n_test = ((idx.len() as f64) * test_fraction).round() as usize;
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Split { train, test }
}

/// Anything that maps a feature row to a label.
pub trait Classifier {
    fn predict(&self, x: &[f64]) -> Label;

    fn predict_all(&self, data: &Dataset) -> Vec<Label> {
        data.features().iter().map(|x| self.predict(x)).collect()
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
