//! CART decision trees with Gini splits and bagged random forests.

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Classifier, Dataset, Label, LearnError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    /// Features tried per split; `None` tries all of them.
    pub max_features: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_features: None,
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Leaf(Label),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    // Written in counts so that swapping the classes gives the same bits.
    let neg = total - pos;
    2.0 * (pos * neg) as f64 / (total * total) as f64
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

struct Builder<'a, R> {
    data: &'a Dataset,
    params: TreeParams,
    rng: &'a mut R,
    nodes: Vec<Node>,
}

impl<R: Rng> Builder<'_, R> {
    /// Majority label; ties go to the first sample in node order.
    fn leaf_label(&self, samples: &[usize]) -> Label {
        let pos = samples
            .iter()
            .filter(|&&i| self.data.label(i) == Label::Positive)
            .count();
        let neg = samples.len() - pos;
        match pos.cmp(&neg) {
            std::cmp::Ordering::Greater => Label::Positive,
            std::cmp::Ordering::Less => Label::Negative,
            std::cmp::Ordering::Equal => self.data.label(samples[0]),
        }
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.data.dim();
        match self.params.max_features {
            Some(m) if m < d => sample(self.rng, d, m.max(1)).into_vec(),
            _ => (0..d).collect(),
        }
    }

    fn best_split(&mut self, samples: &[usize]) -> Option<SplitChoice> {
        let total = samples.len();
        let total_pos = samples
            .iter()
            .filter(|&&i| self.data.label(i) == Label::Positive)
            .count();
        let parent = gini(total_pos, total);
        let mut best: Option<SplitChoice> = None;
        let mut sorted = samples.to_vec();
        for feature in self.candidate_features() {
            let value = |i: usize| self.data.row(i)[feature];
            sorted.sort_by(|&a, &b| value(a).total_cmp(&value(b)));
            let mut left_pos = 0;
            for k in 1..total {
                left_pos += (self.data.label(sorted[k - 1]) == Label::Positive) as usize;
                let (lo, hi) = (value(sorted[k - 1]), value(sorted[k]));
                if lo == hi {
                    continue;
                }
                let right_pos = total_pos - left_pos;
                let impurity = (k as f64 * gini(left_pos, k)
                    + (total - k) as f64 * gini(right_pos, total - k))
                    / total as f64;
                if impurity < best.as_ref().map_or(parent, |b| b.impurity) {
                    let mid = lo + (hi - lo) / 2.0;
                    best = Some(SplitChoice {
                        feature,
                        threshold: if mid < hi { mid } else { lo },
                        impurity,
                    });
                }
            }
        }
        best
    }

    fn build(&mut self, samples: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(self.leaf_label(&samples)));
        let first = self.data.label(samples[0]);
        let pure = samples.iter().all(|&i| self.data.label(i) == first);
        let too_deep = self.params.max_depth.is_some_and(|m| depth >= m);
        if pure || too_deep || samples.len() < self.params.min_samples_split.max(2) {
            return id;
        }
        let Some(split) = self.best_split(&samples) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = samples
            .into_iter()
            .partition(|&i| self.data.row(i)[split.feature] <= split.threshold);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

impl DecisionTree {
    /// Plain CART on every row of `data`.
    pub fn fit(data: &Dataset, params: TreeParams) -> Result<Self, LearnError> {
        let samples: Vec<usize> = (0..data.len()).collect();
        // With all features considered the rng is never touched.
        Self::fit_samples(data, samples, params, &mut ChaCha8Rng::seed_from_u64(0))
    }

    /// Grows a tree on `samples`, which may repeat rows (bootstrap).
    pub fn fit_samples(
        data: &Dataset,
        samples: Vec<usize>,
        params: TreeParams,
        rng: &mut impl Rng,
    ) -> Result<Self, LearnError> {
        if samples.is_empty() {
            return Err(LearnError::EmptyTrainingSet);
        }
        let mut builder = Builder {
            data,
            params,
            rng,
            nodes: Vec::new(),
        };
        builder.build(samples, 0);
        Ok(DecisionTree {
            nodes: builder.nodes,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

impl Classifier for DecisionTree {
    fn predict(&self, x: &[f64]) -> Label {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf(label) => return label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomForestParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means `floor(sqrt(d))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
}

impl Default for RandomForestParams {
    fn default() -> Self {
        RandomForestParams {
            n_trees: 100,
            max_features: None,
            bootstrap: true,
            max_depth: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }
}

impl Classifier for RandomForest {
    /// Majority vote; a tied vote follows the first tree.
    fn predict(&self, x: &[f64]) -> Label {
        let votes: Vec<Label> = self.trees.iter().map(|t| t.predict(x)).collect();
        let pos = votes.iter().filter(|&&l| l == Label::Positive).count();
        let neg = votes.len() - pos;
        match pos.cmp(&neg) {
            std::cmp::Ordering::Greater => Label::Positive,
            std::cmp::Ordering::Less => Label::Negative,
            std::cmp::Ordering::Equal => votes[0],
        }
    }
}

pub fn train_random_forest(
    train: &Dataset,
    params: &RandomForestParams,
    seed: u64,
) -> Result<RandomForest, LearnError> {
    train.check_trainable()?;
    if params.n_trees == 0 {
        return Err(LearnError::InvalidHyperparameter("n_trees must be at least 1".into()));
    }
    let d = train.dim();
    let max_features = params
        .max_features
        .unwrap_or_else(|| ((d as f64).sqrt().floor() as usize).max(1));
    let tree_params = TreeParams {
        max_features: Some(max_features),
        max_depth: params.max_depth,
        min_samples_split: 2,
    };
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let n = train.len();
    let trees = (0..params.n_trees)
        .map(|_| {
            let mut rng = ChaCha8Rng::seed_from_u64(master.next_u64());
            let samples = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            DecisionTree::fit_samples(train, samples, tree_params, &mut rng)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RandomForest { trees })
}
