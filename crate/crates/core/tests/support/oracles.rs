//! Classifier and metric scenarios shared by the learner tests and the
//! acceptance run. Each function returns what it measured; callers decide
//! what passes.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sensecrowd_core::learners::forest::{DecisionTree, TreeParams};
use sensecrowd_core::learners::{
    evaluate, evaluate_model, knn_predict, nearest, train_linear_svm, train_random_forest,
    train_rbf_svm, Dataset, Label, LinearSvmParams, Metrics, Mlp, RandomForestParams,
    RbfSvmParams,
};

fn label(positive: bool) -> Label {
    if positive {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// Sort-everything restatement of k-nearest-neighbours: rank by squared
/// distance then index, vote, and break a tied vote with the closest row.
pub fn brute_force_knn(train: &Dataset, query: &[f64], k: usize) -> (Vec<usize>, Label) {
    let mut ranked: Vec<(f64, usize)> = (0..train.len())
        .map(|i| {
            let d: f64 = train
                .row(i)
                .iter()
                .zip(query)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (d, i)
        })
        .collect();
    ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let top: Vec<usize> = ranked.iter().take(k).map(|r| r.1).collect();
    let pos = top.iter().filter(|&&i| train.label(i) == Label::Positive).count();
    let vote = if 2 * pos > top.len() {
        Label::Positive
    } else if 2 * pos < top.len() {
        Label::Negative
    } else {
        train.label(top[0])
    };
    (top, vote)
}

pub struct KnnReport {
    pub datasets: usize,
    pub queries: usize,
    pub mismatches: usize,
}

/// Random datasets of up to 500 rows. Half of them use small integer
/// coordinates so that distance ties actually occur.
pub fn knn_against_oracle(datasets: usize, seed: u64) -> KnnReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = KnnReport {
        datasets,
        queries: 0,
        mismatches: 0,
    };
    for round in 0..datasets {
        let n = rng.gen_range(1..=500);
        let d = rng.gen_range(1..=8);
        let gridded = round % 2 == 0;
        let point = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..d)
                .map(|_| {
                    if gridded {
                        rng.gen_range(-3..=3) as f64
                    } else {
                        rng.gen_range(-5.0..5.0)
                    }
                })
                .collect()
        };
        let rows: Vec<Vec<f64>> = (0..n).map(|_| point(&mut rng)).collect();
        let labels: Vec<Label> = (0..n).map(|_| label(rng.gen_bool(0.5))).collect();
        let train = Dataset::new(rows, labels).unwrap();
        for _ in 0..10 {
            let k = rng.gen_range(1..=25);
            let q = point(&mut rng);
            let (idx, vote) = brute_force_knn(&train, &q, k);
            report.queries += 1;
            if nearest(&train, &q, k) != idx || knn_predict(&train, &q, k) != vote {
                report.mismatches += 1;
            }
        }
    }
    report
}

/// Largest `|analytic - numeric| / max(|analytic| + |numeric|, 1e-8)` over
/// every parameter, with central differences of step `1e-5`.
pub fn mlp_gradient_check(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..8)
        .map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let labels: Vec<Label> = (0..8).map(|i| label(i % 3 == 0)).collect();
    let data = Dataset::new(rows, labels).unwrap();
    let mlp = Mlp::new(5, &[4, 3], seed);
    let all: Vec<usize> = (0..data.len()).collect();
    let (_, grad) = mlp.loss_and_gradient(&data, &all);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for p in 0..grad.len() {
        let mut plus = mlp.clone();
        plus.parameters_mut()[p] += h;
        let mut minus = mlp.clone();
        minus.parameters_mut()[p] -= h;
        let numeric = (plus.loss(&data) - minus.loss(&data)) / (2.0 * h);
        let err = (grad[p] - numeric).abs() / (grad[p].abs() + numeric.abs()).max(1e-8);
        worst = worst.max(err);
    }
    worst
}

/// Two Gaussian-ish blobs in 5 dimensions, kept only where the hidden
/// hyperplane `w.x + b` gives functional margin at least 1. Returns the data
/// and that hyperplane, which certifies separability.
pub fn separable_blobs(n: usize, seed: u64) -> (Dataset, Vec<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = vec![1.0, -0.5, 0.25, 0.0, 0.75];
    let b = -0.5;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    while rows.len() < n {
        let positive = rows.len() % 2 == 0;
        let centre = if positive { 1.5 } else { -1.5 };
        let x: Vec<f64> = w
            .iter()
            .map(|wi| centre * wi + rng.gen_range(-1.5..1.5))
            .collect();
        let f: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + b;
        if label(positive).sign() * f >= 1.0 {
            rows.push(x);
            labels.push(label(positive));
        }
    }
    (Dataset::new(rows, labels).unwrap(), w, b)
}

/// Smallest `y (w.x + b)` over the set.
pub fn certified_margin(data: &Dataset, w: &[f64], b: f64) -> f64 {
    (0..data.len())
        .map(|i| {
            let f: f64 = w.iter().zip(data.row(i)).map(|(a, x)| a * x).sum::<f64>() + b;
            data.label(i).sign() * f
        })
        .fold(f64::INFINITY, f64::min)
}

pub struct BlobReport {
    pub train_margin: f64,
    pub test_margin: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

pub fn linear_svm_on_blobs(seed: u64) -> BlobReport {
    let (train, w, b) = separable_blobs(200, seed);
    let (test, _, _) = separable_blobs(200, seed.wrapping_add(1000));
    let model = train_linear_svm(&train, &LinearSvmParams::default(), seed).unwrap();
    BlobReport {
        train_margin: certified_margin(&train, &w, b),
        test_margin: certified_margin(&test, &w, b),
        train_accuracy: evaluate_model(&model, &train).accuracy,
        test_accuracy: evaluate_model(&model, &test).accuracy,
    }
}

pub fn xor() -> Dataset {
    Dataset::new(
        vec![
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
        ],
        vec![
            Label::Negative,
            Label::Negative,
            Label::Positive,
            Label::Positive,
        ],
    )
    .unwrap()
}

/// Number of XOR points the Gaussian SVM classifies correctly after training
/// on them.
pub fn rbf_xor_correct() -> usize {
    let data = xor();
    let params = RbfSvmParams {
        c: 10.0,
        gamma: Some(1.0),
        ..Default::default()
    };
    let model = train_rbf_svm(&data, &params, 0).unwrap();
    evaluate_model(&model, &data).confusion.correct()
}

/// Two informative coordinates decide the label (with 10% of labels
/// flipped); thirteen more are pure noise.
pub fn noisy_features(n: usize, rng: &mut ChaCha8Rng) -> Dataset {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..n {
        let x: Vec<f64> = (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let clean = x[0] + x[1] > 0.0;
        labels.push(label(clean != rng.gen_bool(0.1)));
        rows.push(x);
    }
    Dataset::new(rows, labels).unwrap()
}

pub struct ForestReport {
    pub forest: Vec<f64>,
    pub tree: Vec<f64>,
}

impl ForestReport {
    pub fn forest_mean(&self) -> f64 {
        self.forest.iter().sum::<f64>() / self.forest.len() as f64
    }

    pub fn tree_mean(&self) -> f64 {
        self.tree.iter().sum::<f64>() / self.tree.len() as f64
    }
}

pub fn forest_vs_tree(seeds: u64) -> ForestReport {
    let mut report = ForestReport {
        forest: Vec::new(),
        tree: Vec::new(),
    };
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let train = noisy_features(300, &mut rng);
        let test = noisy_features(300, &mut rng);
        let forest = train_random_forest(&train, &RandomForestParams::default(), seed).unwrap();
        let tree = DecisionTree::fit(&train, TreeParams::default()).unwrap();
        report.forest.push(evaluate_model(&forest, &test).accuracy);
        report.tree.push(evaluate_model(&tree, &test).accuracy);
    }
    report
}

/// Truth and prediction lists plus hand-computed
/// `[accuracy, precision, recall, f1, pos P, pos R, pos F1, neg P, neg R, neg F1]`.
pub struct MetricsFixture {
    pub name: &'static str,
    pub truth: Vec<Label>,
    pub predicted: Vec<Label>,
    pub expected: [f64; 10],
}

/// Builds label lists from confusion counts, interleaved rather than grouped.
fn from_counts(tp: usize, fn_: usize, fp: usize, tn: usize) -> (Vec<Label>, Vec<Label>) {
    use Label::{Negative as N, Positive as P};
    let mut cells: Vec<(Label, Label)> = Vec::new();
    let mut left = [tp, fn_, fp, tn];
    let pairs = [(P, P), (P, N), (N, P), (N, N)];
    while left.iter().any(|&c| c > 0) {
        for (c, pair) in left.iter_mut().zip(pairs) {
            if *c > 0 {
                *c -= 1;
                cells.push(pair);
            }
        }
    }
    cells.into_iter().unzip()
}

pub fn metrics_fixtures() -> Vec<MetricsFixture> {
    let fixture = |name, counts: (usize, usize, usize, usize), expected| {
        let (truth, predicted) = from_counts(counts.0, counts.1, counts.2, counts.3);
        MetricsFixture {
            name,
            truth,
            predicted,
            expected,
        }
    };
    vec![
        fixture(
            "mixed 3/1/2/4",
            (3, 1, 2, 4),
            [
                7.0 / 10.0,
                7.0 / 10.0,
                17.0 / 24.0,
                23.0 / 33.0,
                3.0 / 5.0,
                3.0 / 4.0,
                2.0 / 3.0,
                4.0 / 5.0,
                2.0 / 3.0,
                8.0 / 11.0,
            ],
        ),
        fixture("perfect", (2, 0, 0, 3), [1.0; 10]),
        fixture(
            "always positive",
            (4, 0, 6, 0),
            [
                2.0 / 5.0,
                1.0 / 5.0,
                1.0 / 2.0,
                2.0 / 7.0,
                2.0 / 5.0,
                1.0,
                4.0 / 7.0,
                0.0,
                0.0,
                0.0,
            ],
        ),
        fixture("all wrong", (0, 2, 3, 0), [0.0; 10]),
        fixture(
            "mixed 5/3/1/11",
            (5, 3, 1, 11),
            [
                4.0 / 5.0,
                17.0 / 21.0,
                37.0 / 48.0,
                71.0 / 91.0,
                5.0 / 6.0,
                5.0 / 8.0,
                5.0 / 7.0,
                11.0 / 14.0,
                11.0 / 12.0,
                11.0 / 13.0,
            ],
        ),
    ]
}

pub fn observed(m: &Metrics) -> [f64; 10] {
    [
        m.accuracy,
        m.precision,
        m.recall,
        m.f1,
        m.positive.precision,
        m.positive.recall,
        m.positive.f1,
        m.negative.precision,
        m.negative.recall,
        m.negative.f1,
    ]
}

/// Largest absolute deviation from the hand values across all fixtures.
pub fn metrics_max_error() -> f64 {
    metrics_fixtures()
        .iter()
        .flat_map(|f| {
            let got = observed(&evaluate(&f.truth, &f.predicted));
            got.into_iter()
                .zip(f.expected)
                .map(|(g, e)| (g - e).abs())
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}
