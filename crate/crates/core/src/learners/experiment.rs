//! Classifier x feature-set grid over a labelled review corpus.
//!
//! One stratified split is fixed by `split_seed`; every cell is trained once
//! per entry of `seeds` and reported as mean and sample standard deviation.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    evaluate_model, stratified_split, train_linear_svm, train_mlp, train_random_forest,
    train_rbf_svm, Classifier, Dataset, Knn, KnnParams, Label, LearnError, LinearSvmParams,
    Metrics, MlpParams, RandomForestParams, RbfSvmParams,
};
use crate::features::{
    assemble, load_embeddings, tokenize_with, EmbeddingError, EmbeddingTable, FeatureConfig,
    FeatureContext, FeatureLayout, PolarityError, PolarityLexicons, TokenizerConfig,
};
use crate::inventory::{InventoryError, SenseInventory};
use crate::lexicon::SenseLexicon;
use crate::lexicon_file::{read_records, sense_lexicon, LexiconFileError};
use crate::skipgram::{train_embeddings, SkipGramConfig, TrainError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("experiment config: {0}")]
    Config(#[from] toml::de::Error),
    #[error("reviews line {line}: {message}")]
    Review { line: usize, message: String },
    #[error("the review corpus is empty")]
    NoReviews,
    #[error("embeddings: {0}")]
    Embedding(#[from] EmbeddingError),
    #[error("polarity lexicon: {0}")]
    Polarity(#[from] PolarityError),
    #[error("sense lexicon: {0}")]
    Lexicon(#[from] LexiconFileError),
    #[error("inventory: {0}")]
    Inventory(#[from] InventoryError),
    #[error("embedding training: {0}")]
    Train(#[from] TrainError),
    #[error("{0}")]
    Learn(#[from] LearnError),
    #[error("invalid option: {0}")]
    Invalid(String),
}

fn open(path: &Path) -> Result<BufReader<File>, ExperimentError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub id: String,
    pub text: String,
    pub label: Label,
}

/// JSON lines `{"id","text","label":"pos"|"neg"}`; blank lines are skipped.
pub fn read_reviews(reader: impl BufRead) -> Result<Vec<Review>, ExperimentError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| ExperimentError::Review {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let review = serde_json::from_str(&line).map_err(|e| ExperimentError::Review {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(review);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    LinearSvm,
    RbfSvm,
    RandomForest,
    Mlp,
    Knn,
}

impl ClassifierKind {
    /// Report row order.
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::LinearSvm,
        ClassifierKind::RbfSvm,
        ClassifierKind::RandomForest,
        ClassifierKind::Mlp,
        ClassifierKind::Knn,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            ClassifierKind::LinearSvm => "Linear SVM",
            ClassifierKind::RbfSvm => "Gaussian SVM",
            ClassifierKind::RandomForest => "Random Forest",
            ClassifierKind::Mlp => "Neural Network",
            ClassifierKind::Knn => "K-Nearest Neighbor",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    Base,
    Polarity,
    Ontosense,
    Both,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 4] = [
        FeatureSet::Base,
        FeatureSet::Polarity,
        FeatureSet::Ontosense,
        FeatureSet::Both,
    ];

    pub fn config(self) -> FeatureConfig {
        match self {
            FeatureSet::Base => FeatureConfig::BASE,
            FeatureSet::Polarity => FeatureConfig::POLARITY,
            FeatureSet::Ontosense => FeatureConfig::ONTOSENSE,
            FeatureSet::Both => FeatureConfig::BOTH,
        }
    }

    pub fn header(self) -> &'static str {
        match self {
            FeatureSet::Base => "Word2Vec",
            FeatureSet::Polarity => "+Polarity",
            FeatureSet::Ontosense => "+OntoSenseNet",
            FeatureSet::Both => "+Both",
        }
    }
}

/// Input files. Relative paths are resolved against the config file's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub reviews: PathBuf,
    /// Pre-trained vectors; when absent they are trained on the reviews.
    #[serde(default)]
    pub embeddings: Option<PathBuf>,
    pub lexicon: PathBuf,
    #[serde(default)]
    pub inventory: Option<PathBuf>,
    #[serde(default)]
    pub polarity_unigrams: Option<PathBuf>,
    #[serde(default)]
    pub polarity_bigrams: Option<PathBuf>,
    #[serde(default)]
    pub skipgram: SkipGramConfig,
}

impl DataPaths {
    fn rebase(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        fix(&mut self.reviews);
        fix(&mut self.lexicon);
        for p in [
            &mut self.embeddings,
            &mut self.inventory,
            &mut self.polarity_unigrams,
            &mut self.polarity_bigrams,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentOptions {
    pub seeds: Vec<u64>,
    pub split_seed: u64,
    pub test_fraction: f64,
    pub classifiers: Vec<ClassifierKind>,
    pub feature_sets: Vec<FeatureSet>,
    /// Z-score features with training-split statistics.
    pub standardize: bool,
    pub normalize_by_length: bool,
    pub lowercase: bool,
    pub linear_svm: LinearSvmParams,
    pub rbf_svm: RbfSvmParams,
    pub random_forest: RandomForestParams,
    pub mlp: MlpParams,
    pub knn: KnnParams,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions {
            seeds: (0..10).collect(),
            split_seed: 0,
            test_fraction: 0.2,
            classifiers: ClassifierKind::ALL.to_vec(),
            feature_sets: FeatureSet::ALL.to_vec(),
            standardize: true,
            normalize_by_length: false,
            lowercase: false,
            linear_svm: LinearSvmParams::default(),
            rbf_svm: RbfSvmParams::default(),
            random_forest: RandomForestParams::default(),
            mlp: MlpParams::default(),
            knn: KnnParams::default(),
        }
    }
}

/// `[data]` holds file paths, `[run]` the grid and hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataPaths,
    #[serde(default)]
    pub run: ExperimentOptions,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, ExperimentError> {
        let mut cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.data.rebase(base_dir);
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, dir)
    }
}

/// Everything the grid reads, loaded once.
#[derive(Clone, Debug)]
pub struct ExperimentData {
    pub reviews: Vec<Review>,
    pub embeddings: EmbeddingTable,
    pub polarity: PolarityLexicons,
    pub senses: SenseLexicon,
    pub inventory: SenseInventory,
}

impl ExperimentData {
    pub fn load(paths: &DataPaths, lowercase: bool) -> Result<Self, ExperimentError> {
        let reviews = read_reviews(open(&paths.reviews)?)?;
        if reviews.is_empty() {
            return Err(ExperimentError::NoReviews);
        }
        let inventory = match &paths.inventory {
            Some(p) => SenseInventory::load(p)?,
            None => SenseInventory::default(),
        };
        let senses = sense_lexicon(&read_records(open(&paths.lexicon)?)?);
        let mut polarity = PolarityLexicons::default();
        if let Some(p) = &paths.polarity_unigrams {
            polarity.read_unigrams(open(p)?)?;
        }
        if let Some(p) = &paths.polarity_bigrams {
            polarity.read_bigrams(open(p)?)?;
        }
        let embeddings = match &paths.embeddings {
            Some(p) => load_embeddings(open(p)?)?,
            None => {
                let cfg = TokenizerConfig { lowercase };
                let corpus: Vec<Vec<String>> =
                    reviews.iter().map(|r| tokenize_with(&r.text, cfg)).collect();
                train_embeddings(&corpus, &paths.skipgram)?
            }
        };
        Ok(ExperimentData {
            reviews,
            embeddings,
            polarity,
            senses,
            inventory,
        })
    }

    fn context(&self) -> FeatureContext<'_> {
        FeatureContext {
            embeddings: &self.embeddings,
            polarity: &self.polarity,
            senses: &self.senses,
            inventory: &self.inventory,
        }
    }

    pub fn labels(&self) -> Vec<Label> {
        self.reviews.iter().map(|r| r.label).collect()
    }
}

/// Featurizes every review for one feature set. Also returns how many reviews
/// had no in-vocabulary token.
pub fn featurize_reviews(
    data: &ExperimentData,
    set: FeatureSet,
    options: &ExperimentOptions,
) -> Result<(Dataset, usize), LearnError> {
    let ctx = data.context();
    let tok = TokenizerConfig {
        lowercase: options.lowercase,
    };
    let config = FeatureConfig {
        normalize_by_length: options.normalize_by_length,
        ..set.config()
    };
    let mut flagged = 0;
    let rows = data
        .reviews
        .iter()
        .map(|r| {
            let v = assemble(&tokenize_with(&r.text, tok), &ctx, config);
            flagged += v.flagged as usize;
            v.values
        })
        .collect();
    Ok((Dataset::new(rows, data.labels())?, flagged))
}

pub fn train_classifier(
    kind: ClassifierKind,
    train: &Dataset,
    options: &ExperimentOptions,
    seed: u64,
) -> Result<Box<dyn Classifier>, LearnError> {
    Ok(match kind {
        ClassifierKind::LinearSvm => Box::new(train_linear_svm(train, &options.linear_svm, seed)?),
        ClassifierKind::RbfSvm => Box::new(train_rbf_svm(train, &options.rbf_svm, seed)?),
        ClassifierKind::RandomForest => {
            Box::new(train_random_forest(train, &options.random_forest, seed)?)
        }
        ClassifierKind::Mlp => Box::new(train_mlp(train, &options.mlp, seed)?),
        ClassifierKind::Knn => Box::new(Knn::fit(train, &options.knn)?),
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        if values.is_empty() {
            return Summary::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Summary { mean, std }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub metrics: Metrics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub classifier: ClassifierKind,
    pub feature_set: FeatureSet,
    pub feature_dim: usize,
    pub accuracy: Summary,
    pub precision: Summary,
    pub recall: Summary,
    pub f1: Summary,
    pub micro_f1: Summary,
    pub runs: Vec<RunResult>,
}

impl CellReport {
    pub fn from_runs(
        classifier: ClassifierKind,
        feature_set: FeatureSet,
        feature_dim: usize,
        runs: Vec<RunResult>,
    ) -> Self {
        let pick = |f: fn(&Metrics) -> f64| {
            Summary::of(&runs.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>())
        };
        CellReport {
            classifier,
            feature_set,
            feature_dim,
            accuracy: pick(|m| m.accuracy),
            precision: pick(|m| m.precision),
            recall: pick(|m| m.recall),
            f1: pick(|m| m.f1),
            micro_f1: pick(|m| m.micro_f1),
            runs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seeds: Vec<u64>,
    pub train_size: usize,
    pub test_size: usize,
    /// Reviews with no in-vocabulary token (zero embedding average).
    pub flagged_reviews: usize,
    pub classifiers: Vec<ClassifierKind>,
    pub feature_sets: Vec<FeatureSet>,
    /// Classifier-major, in the order of `classifiers` then `feature_sets`.
    pub cells: Vec<CellReport>,
}

fn pad(s: &str, width: usize) -> String {
    format!("{s:<width$}")
}

impl ExperimentReport {
    pub fn cell(&self, classifier: ClassifierKind, set: FeatureSet) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.classifier == classifier && c.feature_set == set)
    }

    /// Accuracy in percent, `mean ± std`, one row per classifier.
    pub fn render_accuracy_table(&self) -> String {
        const FIRST: usize = 20;
        const COL: usize = 16;
        let mut out = pad("Classifier", FIRST);
        for s in &self.feature_sets {
            out.push_str(&pad(s.header(), COL));
        }
        let mut out = out.trim_end().to_string();
        out.push('\n');
        for &k in &self.classifiers {
            let mut line = pad(k.display_name(), FIRST);
            for &s in &self.feature_sets {
                let cell = match self.cell(k, s) {
                    Some(c) => format!(
                        "{:.2} ± {:.2}",
                        c.accuracy.mean * 100.0,
                        c.accuracy.std * 100.0
                    ),
                    None => "-".to_string(),
                };
                line.push_str(&pad(&cell, COL));
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        self.push_footer(&mut out);
        out
    }

    /// Macro precision, recall and F1 of the neural network, one column per
    /// feature set.
    pub fn render_mlp_table(&self) -> String {
        const FIRST: usize = 12;
        const COL: usize = 16;
        let mut out = pad("", FIRST);
        for s in &self.feature_sets {
            out.push_str(&pad(s.header(), COL));
        }
        let mut out = out.trim_end().to_string();
        out.push('\n');
        let rows: [(&str, fn(&CellReport) -> Summary); 3] = [
            ("Precision", |c| c.precision),
            ("Recall", |c| c.recall),
            ("F-Measure", |c| c.f1),
        ];
        for (name, get) in rows {
            let mut line = pad(name, FIRST);
            for &s in &self.feature_sets {
                let cell = match self.cell(ClassifierKind::Mlp, s) {
                    Some(c) => {
                        let v = get(c);
                        format!("{:.3} ± {:.3}", v.mean, v.std)
                    }
                    None => "-".to_string(),
                };
                line.push_str(&pad(&cell, COL));
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        self.push_footer(&mut out);
        out
    }

    fn push_footer(&self, out: &mut String) {
        let dims: Vec<String> = self
            .feature_sets
            .iter()
            .filter_map(|&s| {
                self.cells
                    .iter()
                    .find(|c| c.feature_set == s)
                    .map(|c| c.feature_dim.to_string())
            })
            .collect();
        let _ = writeln!(
            out,
            "dims: {}; seeds: {}; train/test: {}/{}",
            dims.join("/"),
            self.seeds.len(),
            self.train_size,
            self.test_size
        );
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// Runs every requested classifier on every requested feature set.
pub fn run_experiment(
    data: &ExperimentData,
    options: &ExperimentOptions,
) -> Result<ExperimentReport, ExperimentError> {
    if options.seeds.is_empty() {
        return Err(ExperimentError::Invalid("at least one seed is required".into()));
    }
    if !(options.test_fraction > 0.0 && options.test_fraction < 1.0) {
        return Err(ExperimentError::Invalid(
            "test_fraction must lie strictly between 0 and 1".into(),
        ));
    }
    let labels = data.labels();
    let split = stratified_split(&labels, options.test_fraction, options.split_seed);
    if split.train.is_empty() || split.test.is_empty() {
        return Err(ExperimentError::Invalid(
            "the split leaves an empty train or test set".into(),
        ));
    }

    let mut flagged_reviews = 0;
    let mut prepared = Vec::new();
    for &set in &options.feature_sets {
        let (all, flagged) = featurize_reviews(data, set, options)?;
        flagged_reviews = flagged;
        let mut train = all.subset(&split.train);
        let mut test = all.subset(&split.test);
        if options.standardize {
            let s = train.standardizer();
            train = train.map_features(|r| s.transform(r));
            test = test.map_features(|r| s.transform(r));
        }
        let dim = FeatureLayout::new(data.embeddings.dim(), set.config()).len();
        prepared.push((set, dim, train, test));
    }

    let jobs: Vec<(ClassifierKind, usize)> = options
        .classifiers
        .iter()
        .flat_map(|&k| (0..prepared.len()).map(move |p| (k, p)))
        .collect();
    let results: Mutex<Vec<Option<Result<CellReport, LearnError>>>> =
        Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(jobs.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let j = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(kind, p)) = jobs.get(j) else { break };
                let (set, dim, train, test) = &prepared[p];
                let cell = options
                    .seeds
                    .iter()
                    .map(|&seed| {
                        let model = train_classifier(kind, train, options, seed)?;
                        Ok(RunResult {
                            seed,
                            metrics: evaluate_model(model.as_ref(), test),
                        })
                    })
                    .collect::<Result<Vec<_>, LearnError>>()
                    .map(|runs| CellReport::from_runs(kind, *set, *dim, runs));
                log::debug!("finished {} / {:?}", kind.display_name(), set);
                results.lock().unwrap()[j] = Some(cell);
            });
        }
    });
    let cells = results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(ExperimentReport {
        seeds: options.seeds.clone(),
        train_size: split.train.len(),
        test_size: split.test.len(),
        flagged_reviews,
        classifiers: options.classifiers.clone(),
        feature_sets: options.feature_sets.clone(),
        cells,
    })
}
