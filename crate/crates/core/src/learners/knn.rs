//! k-nearest-neighbour classification under Euclidean distance.

use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{squared_distance, Classifier, Dataset, Label, LearnError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Candidate {
    distance: f64,
    index: usize,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.index.cmp(&other.index))
    }
}

/// Indices of the `k` nearest training rows, nearest first. Equal distances
/// prefer the lower training index.
pub fn nearest(train: &Dataset, query: &[f64], k: usize) -> Vec<usize> {
    let mut heap = BinaryHeap::with_capacity(k + 1);
    for i in 0..train.len() {
        let c = Candidate {
            distance: squared_distance(train.row(i), query),
            index: i,
        };
        if heap.len() < k {
            heap.push(c);
        } else if heap.peek().is_some_and(|worst| c < *worst) {
            heap.pop();
            heap.push(c);
        }
    }
    heap.into_sorted_vec().into_iter().map(|c| c.index).collect()
}

/// Majority label among the `k` nearest rows. A tied vote goes to the label
/// of the single nearest row.
pub fn knn_predict(train: &Dataset, query: &[f64], k: usize) -> Label {
    let idx = nearest(train, query, k);
    let pos = idx
        .iter()
        .filter(|&&i| train.label(i) == Label::Positive)
        .count();
    let neg = idx.len() - pos;
    match pos.cmp(&neg) {
        std::cmp::Ordering::Greater => Label::Positive,
        std::cmp::Ordering::Less => Label::Negative,
        std::cmp::Ordering::Equal => train.label(idx[0]),
    }
}

/// Stores the training set; all work happens at prediction time.
#[derive(Clone, Debug, PartialEq)]
pub struct Knn {
    train: Dataset,
    k: usize,
}

impl Knn {
    pub fn fit(train: &Dataset, params: &KnnParams) -> Result<Self, LearnError> {
        train.check_trainable()?;
        if params.k == 0 {
            return Err(LearnError::InvalidHyperparameter("k must be at least 1".into()));
        }
        Ok(Knn {
            train: train.clone(),
            k: params.k,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

impl Classifier for Knn {
    fn predict(&self, x: &[f64]) -> Label {
        knn_predict(&self.train, x, self.k)
    }
}
