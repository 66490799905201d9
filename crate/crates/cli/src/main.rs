//! `sensecrowd`: one binary for the annotation service and the analysis
//! pipeline.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for data errors (missing
//! or malformed input files, failed service startup).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sensecrowd_core::corpus::OrderFilter;
use sensecrowd_core::learners::experiment::{ClassifierKind, FeatureSet};
use sensecrowd_core::{AnnotationKind, EntryStatus, PartOfSpeech};

#[derive(Debug, Parser)]
#[command(name = "sensecrowd", version, about = "Crowd-sourced sense lexicon tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the HTTP annotation service.
    Serve(ServeArgs),
    /// Add lexicon entries from a JSON-lines file to the service store.
    ImportLexicon(ImportArgs),
    /// Write the store's lexicon as JSON lines.
    ExportLexicon(ExportArgs),
    /// Extract adverb/verb pairs from a POS-tagged corpus.
    ExtractPairs(ExtractArgs),
    /// Adverb sense-class by verb sense-type distribution of extracted pairs.
    Distribution(DistributionArgs),
    /// Train skip-gram word vectors.
    TrainEmbeddings(TrainArgs),
    /// Turn reviews into feature vectors.
    Featurize(FeaturizeArgs),
    /// Run the classifier by feature-set grid.
    Experiment(ExperimentArgs),
}

/// Where the service configuration comes from. Flags beat `SENSECROWD_*`
/// variables, which beat the file.
#[derive(Debug, Args)]
struct StoreArgs {
    /// Service config file (TOML).
    #[arg(long, env = "SENSECROWD_CONFIG")]
    config: Option<PathBuf>,
    /// Directory holding the event log and outbox.
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[command(flatten)]
    store: StoreArgs,
    /// Address to listen on, e.g. 127.0.0.1:8080.
    #[arg(long)]
    listen: Option<String>,
    /// Built UI assets to serve at `/`.
    #[arg(long)]
    static_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ImportArgs {
    #[command(flatten)]
    store: StoreArgs,
    /// Lexicon file in the interchange format.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[command(flatten)]
    store: StoreArgs,
    /// Output file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pos: Option<PosArg>,
    #[arg(long, value_enum, default_value = "sense")]
    kind: KindArg,
    #[arg(long, value_enum)]
    status: Option<StatusArg>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// Tagged corpus: `surface<TAB>tag` per line, blank line between sentences.
    #[arg(long)]
    corpus: PathBuf,
    /// Tag-to-category mapping (TOML); the built-in BIS/Penn map otherwise.
    #[arg(long)]
    tagset: Option<PathBuf>,
    /// Fail on tags missing from the tagset instead of ignoring them.
    #[arg(long)]
    strict: bool,
    /// Largest token distance of a pair; 1 is adjacent bigrams.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    window: u32,
    /// Write the pairs here as JSON lines.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct DistributionArgs {
    /// Pairs written by `extract-pairs --output`.
    #[arg(long)]
    pairs: PathBuf,
    /// Sense lexicon in the interchange format.
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long)]
    inventory: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "pooled")]
    order: OrderArg,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Training text.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: CorpusFormat,
    /// Vectors in word2vec text format.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 200)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 5)]
    negatives: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 0.025)]
    lr: f32,
    #[arg(long, default_value_t = 1)]
    min_count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    lowercase: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct FeaturizeArgs {
    /// Experiment config naming the data files.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    set: SetArg,
    /// One `{"id","label","features"}` object per review.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Replace the configured seeds with 0..N.
    #[arg(long)]
    seeds: Option<u64>,
    /// Comma-separated subset of classifiers.
    #[arg(long, value_enum, value_delimiter = ',')]
    classifiers: Vec<ClassifierArg>,
    /// Comma-separated subset of feature sets.
    #[arg(long, value_enum, value_delimiter = ',')]
    feature_sets: Vec<SetArg>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PosArg {
    Verb,
    Adverb,
    Adjective,
}

impl From<PosArg> for PartOfSpeech {
    fn from(p: PosArg) -> Self {
        match p {
            PosArg::Verb => PartOfSpeech::Verb,
            PosArg::Adverb => PartOfSpeech::Adverb,
            PosArg::Adjective => PartOfSpeech::Adjective,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Sense,
    Polarity,
}

impl From<KindArg> for AnnotationKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Sense => AnnotationKind::Sense,
            KindArg::Polarity => AnnotationKind::Polarity,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StatusArg {
    PendingReview,
    Active,
    FlaggedUncertain,
    Removed,
}

impl From<StatusArg> for EntryStatus {
    fn from(s: StatusArg) -> Self {
        match s {
            StatusArg::PendingReview => EntryStatus::PendingReview,
            StatusArg::Active => EntryStatus::Active,
            StatusArg::FlaggedUncertain => EntryStatus::FlaggedUncertain,
            StatusArg::Removed => EntryStatus::Removed,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OrderArg {
    Pooled,
    AdverbVerb,
    VerbAdverb,
}

impl From<OrderArg> for OrderFilter {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::Pooled => OrderFilter::Pooled,
            OrderArg::AdverbVerb => OrderFilter::AdverbVerbOnly,
            OrderArg::VerbAdverb => OrderFilter::VerbAdverbOnly,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CorpusFormat {
    /// One sentence per line.
    Text,
    /// Review JSON lines; the `text` field is used.
    Reviews,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SetArg {
    Base,
    Polarity,
    Ontosense,
    Both,
}

impl From<SetArg> for FeatureSet {
    fn from(s: SetArg) -> Self {
        match s {
            SetArg::Base => FeatureSet::Base,
            SetArg::Polarity => FeatureSet::Polarity,
            SetArg::Ontosense => FeatureSet::Ontosense,
            SetArg::Both => FeatureSet::Both,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ClassifierArg {
    LinearSvm,
    RbfSvm,
    RandomForest,
    Mlp,
    Knn,
}

impl From<ClassifierArg> for ClassifierKind {
    fn from(c: ClassifierArg) -> Self {
        match c {
            ClassifierArg::LinearSvm => ClassifierKind::LinearSvm,
            ClassifierArg::RbfSvm => ClassifierKind::RbfSvm,
            ClassifierArg::RandomForest => ClassifierKind::RandomForest,
            ClassifierArg::Mlp => ClassifierKind::Mlp,
            ClassifierArg::Knn => ClassifierKind::Knn,
        }
    }
}

const USAGE_ERROR: u8 = 1;
const DATA_ERROR: u8 = 2;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(USAGE_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Serve(a) => commands::serve(a),
        Command::ImportLexicon(a) => commands::import_lexicon(a),
        Command::ExportLexicon(a) => commands::export_lexicon(a),
        Command::ExtractPairs(a) => commands::extract_pairs(a),
        Command::Distribution(a) => commands::distribution(a),
        Command::TrainEmbeddings(a) => commands::train_embeddings(a),
        Command::Featurize(a) => commands::featurize(a),
        Command::Experiment(a) => commands::experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(DATA_ERROR)
        }
    }
}

/// The error and its causes, skipping causes the message already spells out.
fn describe(e: &anyhow::Error) -> String {
    let mut text = e.to_string();
    for cause in e.chain().skip(1) {
        let cause = cause.to_string();
        if !text.contains(&cause) {
            text = format!("{text}: {cause}");
        }
    }
    text
}
