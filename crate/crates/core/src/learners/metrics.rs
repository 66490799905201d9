//! Confusion-matrix metrics for the two-class problem.

use serde::{Deserialize, Serialize};

use super::{Classifier, Dataset, Label};

/// Counts with `Positive` as the reference class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_positive: usize,
    pub false_negative: usize,
    pub false_positive: usize,
    pub true_negative: usize,
}

impl ConfusionMatrix {
    pub fn from_labels(truth: &[Label], predicted: &[Label]) -> Self {
        assert_eq!(truth.len(), predicted.len(), "label lists differ in length");
        let mut m = ConfusionMatrix::default();
        for (t, p) in truth.iter().zip(predicted) {
            match (t, p) {
                (Label::Positive, Label::Positive) => m.true_positive += 1,
                (Label::Positive, Label::Negative) => m.false_negative += 1,
                (Label::Negative, Label::Positive) => m.false_positive += 1,
                (Label::Negative, Label::Negative) => m.true_negative += 1,
            }
        }
        m
    }

    pub fn total(&self) -> usize {
        self.true_positive + self.false_negative + self.false_positive + self.true_negative
    }

    pub fn correct(&self) -> usize {
        self.true_positive + self.true_negative
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// `accuracy` and the macro-averaged `precision`, `recall` and `f1`, with the
/// micro averages and per-class values alongside.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    pub positive: ClassMetrics,
    pub negative: ClassMetrics,
    pub confusion: ConfusionMatrix,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn class_metrics(tp: usize, fp: usize, fn_: usize) -> ClassMetrics {
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    ClassMetrics {
        precision,
        recall,
        f1: harmonic(precision, recall),
        support: tp + fn_,
    }
}

impl Metrics {
    /// Undefined ratios (empty denominators) count as zero.
    pub fn from_confusion(c: ConfusionMatrix) -> Self {
        let positive = class_metrics(c.true_positive, c.false_positive, c.false_negative);
        let negative = class_metrics(c.true_negative, c.false_negative, c.false_positive);
        let accuracy = ratio(c.correct(), c.total());
        // Each prediction is one TP for its predicted class or one FP, so the
        // pooled ratios all equal accuracy.
        Metrics {
            accuracy,
            precision: (positive.precision + negative.precision) / 2.0,
            recall: (positive.recall + negative.recall) / 2.0,
            f1: (positive.f1 + negative.f1) / 2.0,
            micro_precision: accuracy,
            micro_recall: accuracy,
            micro_f1: accuracy,
            positive,
            negative,
            confusion: c,
        }
    }
}

pub fn evaluate(truth: &[Label], predicted: &[Label]) -> Metrics {
    Metrics::from_confusion(ConfusionMatrix::from_labels(truth, predicted))
}

pub fn evaluate_model(model: &dyn Classifier, test: &Dataset) -> Metrics {
    evaluate(test.labels(), &model.predict_all(test))
}
