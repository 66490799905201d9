//! Linear SVM trained with the Pegasos stochastic subgradient method.
//!
//! Minimises `lambda/2 |w|^2 + mean(max(0, 1 - y (w.x + b)))` with
//! `lambda = 1 / (C n)`. The bias is an extra weight on a constant input of 1,
//! so it is regularised along with `w`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Classifier, Dataset, Label, LearnError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearSvmParams {
    pub c: f64,
    pub epochs: usize,
}

impl Default for LinearSvmParams {
    fn default() -> Self {
        LinearSvmParams { c: 1.0, epochs: 20 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LinearSvm {
    Hyperplane { weights: Vec<f64>, bias: f64 },
    /// Fit on a single-class training set.
    Constant(Label),
}

impl LinearSvm {
    /// Signed distance-like score; positive means the positive class.
    pub fn decision_function(&self, x: &[f64]) -> f64 {
        match self {
            LinearSvm::Hyperplane { weights, bias } => {
                weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + bias
            }
            LinearSvm::Constant(label) => label.sign(),
        }
    }
}

impl Classifier for LinearSvm {
    fn predict(&self, x: &[f64]) -> Label {
        Label::from_sign(self.decision_function(x))
    }
}

pub fn train_linear_svm(
    train: &Dataset,
    params: &LinearSvmParams,
    seed: u64,
) -> Result<LinearSvm, LearnError> {
    train.check_trainable()?;
    if !(params.c > 0.0) {
        return Err(LearnError::InvalidHyperparameter("C must be positive".into()));
    }
    if let Some(label) = train.single_class() {
        return Ok(LinearSvm::Constant(label));
    }
    let n = train.len();
    let d = train.dim();
    let lambda = 1.0 / (params.c * n as f64);
    let mut w = vec![0.0; d + 1];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0usize;
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let x = train.row(i);
            let y = train.label(i).sign();
            let margin = y * (w[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[d]);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                w[..d].iter_mut().zip(x).for_each(|(v, xi)| *v += eta * y * xi);
                w[d] += eta * y;
            }
        }
    }
    let bias = w.pop().unwrap();
    Ok(LinearSvm::Hyperplane { weights: w, bias })
}
