//! Gaussian-kernel SVM solved with SMO.
//!
//! The dual is optimised with the second-order working set selection used by
//! LIBSVM: the first index is the maximal violator, the second maximises the
//! guaranteed objective decrease. The kernel matrix is computed once up front.

use serde::{Deserialize, Serialize};

use super::{squared_distance, Classifier, Dataset, Label, LearnError};

const TAU: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RbfSvmParams {
    pub c: f64,
    /// Kernel width; `None` means `1 / d`.
    pub gamma: Option<f64>,
    /// Stopping tolerance on the maximal KKT violation.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for RbfSvmParams {
    fn default() -> Self {
        RbfSvmParams {
            c: 1.0,
            gamma: None,
            tolerance: 1e-3,
            max_iterations: 10_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RbfSvm {
    Kernel {
        support_vectors: Vec<Vec<f64>>,
        /// `alpha_i * y_i` for each support vector.
        coefficients: Vec<f64>,
        rho: f64,
        gamma: f64,
        iterations: usize,
    },
    Constant(Label),
}

impl RbfSvm {
    pub fn decision_function(&self, x: &[f64]) -> f64 {
        match self {
            RbfSvm::Kernel {
                support_vectors,
                coefficients,
                rho,
                gamma,
                ..
            } => {
                support_vectors
                    .iter()
                    .zip(coefficients)
                    .map(|(sv, c)| c * (-gamma * squared_distance(sv, x)).exp())
                    .sum::<f64>()
                    - rho
            }
            RbfSvm::Constant(label) => label.sign(),
        }
    }

    pub fn support_vector_count(&self) -> usize {
        match self {
            RbfSvm::Kernel { coefficients, .. } => coefficients.len(),
            RbfSvm::Constant(_) => 0,
        }
    }
}

impl Classifier for RbfSvm {
    fn predict(&self, x: &[f64]) -> Label {
        Label::from_sign(self.decision_function(x))
    }
}

/// `seed` is accepted for a uniform trainer signature; SMO with this working
/// set rule is deterministic on its own.
pub fn train_rbf_svm(
    train: &Dataset,
    params: &RbfSvmParams,
    _seed: u64,
) -> Result<RbfSvm, LearnError> {
    train.check_trainable()?;
    if !(params.c > 0.0) {
        return Err(LearnError::InvalidHyperparameter("C must be positive".into()));
    }
    let gamma = params.gamma.unwrap_or(1.0 / train.dim().max(1) as f64);
    if !(gamma > 0.0) {
        return Err(LearnError::InvalidHyperparameter("gamma must be positive".into()));
    }
    if let Some(label) = train.single_class() {
        return Ok(RbfSvm::Constant(label));
    }

    let n = train.len();
    let c = params.c;
    let y: Vec<f64> = train.labels().iter().map(|l| l.sign()).collect();
    let mut kernel = vec![0.0; n * n];
    for i in 0..n {
        kernel[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let k = (-gamma * squared_distance(train.row(i), train.row(j))).exp();
            kernel[i * n + j] = k;
            kernel[j * n + i] = k;
        }
    }
    let k = |i: usize, j: usize| kernel[i * n + j];

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    while iterations < params.max_iterations {
        // First index: maximal violator in I_up.
        let mut g_max = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let in_up = if y[t] > 0.0 { !upper(alpha[t]) } else { !lower(alpha[t]) };
            if in_up && -y[t] * grad[t] >= g_max {
                g_max = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let Some(i) = i_sel else { break };

        // Second index: best second-order decrease in I_low.
        let mut g_max2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best = f64::INFINITY;
        for t in 0..n {
            let in_low = if y[t] > 0.0 { !lower(alpha[t]) } else { !upper(alpha[t]) };
            if !in_low {
                continue;
            }
            let v = y[t] * grad[t];
            g_max2 = g_max2.max(v);
            let diff = g_max + v;
            if diff > 0.0 {
                let quad = k(i, i) + k(t, t) - 2.0 * k(i, t);
                let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                if obj <= best {
                    best = obj;
                    j_sel = Some(t);
                }
            }
        }
        let Some(j) = j_sel else { break };
        if g_max + g_max2 < params.tolerance {
            break;
        }
        iterations += 1;

        let q_ij = y[i] * y[j] * k(i, j);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (k(i, i) + k(j, j) + 2.0 * q_ij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (k(i, i) + k(j, j) - 2.0 * q_ij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (d_i, d_j) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k(i, t) * d_i + y[j] * k(j, t) * d_j);
        }
    }

    // Offset: mean over free vectors, else the midpoint of the feasible range.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };

    let (support_vectors, coefficients) = (0..n)
        .filter(|&t| alpha[t] > 0.0)
        .map(|t| (train.row(t).to_vec(), alpha[t] * y[t]))
        .unzip();
    Ok(RbfSvm::Kernel {
        support_vectors,
        coefficients,
        rho,
        gamma,
        iterations,
    })
}
