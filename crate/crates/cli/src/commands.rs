use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use sensecrowd_core::corpus::{
    distribution_matrix, extract_pairs as extract, pair_order_stats, parse_tagged_corpus,
    BigramPair, Tagset,
};
use sensecrowd_core::features::{tokenize_with, write_embeddings, FeatureLayout, TokenizerConfig};
use sensecrowd_core::learners::experiment::{
    featurize_reviews, read_reviews, run_experiment, ClassifierKind, ExperimentConfig,
    ExperimentData,
};
use sensecrowd_core::lexicon_file::{read_records, sense_lexicon};
use sensecrowd_core::skipgram::{train_embeddings as train, SkipGramConfig};
use sensecrowd_core::SenseInventory;
use sensecrowd_service::service::ExportFilter;
use sensecrowd_service::{Service, ServiceConfig};
use serde_json::json;

use crate::{
    CorpusFormat, DistributionArgs, ExperimentArgs, ExportArgs, ExtractArgs, FeaturizeArgs,
    ImportArgs, ServeArgs, StoreArgs, TrainArgs,
};

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .with_context(|| format!("cannot open {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("cannot create {}", path.display()))
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json values serialize"));
}

fn service_config(store: &StoreArgs) -> Result<ServiceConfig> {
    let mut config = match &store.config {
        Some(p) => ServiceConfig::load(p)?,
        None => ServiceConfig::default(),
    };
    config.apply_env()?;
    if let Some(d) = &store.data_dir {
        config.data_dir = d.clone();
    }
    Ok(config)
}

fn open_service(config: &ServiceConfig) -> Result<Service> {
    let (service, report) = Service::open(config)?;
    log::info!(
        "{}: replayed {} events",
        config.data_dir.display(),
        report.events
    );
    Ok(service)
}

pub fn serve(args: ServeArgs) -> Result<()> {
    let mut config = service_config(&args.store)?;
    if let Some(l) = args.listen {
        config.listen = l;
    }
    if let Some(d) = args.static_dir {
        config.static_dir = Some(d);
    }
    config.validate()?;
    let service = Arc::new(open_service(&config)?);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("cannot start the async runtime")?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&config.listen)
            .await
            .with_context(|| format!("cannot listen on {}", config.listen))?;
        let addr = listener.local_addr()?;
        // Scripts (and the tests) read the bound port from this line.
        println!("listening on http://{addr}");
        std::io::stdout().flush()?;
        sensecrowd_service::serve(service, listener, config.static_dir.clone(), shutdown_signal())
            .await
            .context("server failed")
    })
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    log::info!("shutting down");
}

pub fn import_lexicon(args: ImportArgs) -> Result<()> {
    let config = service_config(&args.store)?;
    let records = read_records(open(&args.input)?)
        .with_context(|| format!("{}", args.input.display()))?;
    let service = open_service(&config)?;
    let n = service.import(records)?;
    println!("imported {n} entries");
    Ok(())
}

pub fn export_lexicon(args: ExportArgs) -> Result<()> {
    let config = service_config(&args.store)?;
    let service = open_service(&config)?;
    let records = service.export(ExportFilter {
        pos: args.pos.map(Into::into),
        kind: Some(args.kind.into()),
        status: args.status.map(Into::into),
    });
    let mut out: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    sensecrowd_core::lexicon_file::write_records(&mut out, &records)?;
    out.flush()?;
    Ok(())
}

pub fn extract_pairs(args: ExtractArgs) -> Result<()> {
    let tagset = match &args.tagset {
        Some(p) => Tagset::load(p).with_context(|| format!("{}", p.display()))?,
        None => Tagset::default(),
    };
    let sentences = parse_tagged_corpus(open(&args.corpus)?, &tagset, args.strict)
        .with_context(|| format!("{}", args.corpus.display()))?;
    let pairs = extract(&sentences, args.window as usize);
    if let Some(p) = &args.output {
        let mut w = create(p)?;
        for pair in &pairs {
            serde_json::to_writer(&mut w, pair)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
    }
    let stats = pair_order_stats(&pairs);
    if args.json {
        print_json(&json!({
            "sentences": sentences.len(),
            "pairs": pairs.len(),
            "adverb_verb": stats.adverb_verb_count,
            "verb_adverb": stats.verb_adverb_count,
        }));
    } else {
        println!("sentences: {}", sentences.len());
        println!("pairs: {}", pairs.len());
        println!("adverb-verb: {}", stats.adverb_verb_count);
        println!("verb-adverb: {}", stats.verb_adverb_count);
    }
    Ok(())
}

fn read_pairs(path: &Path) -> Result<Vec<BigramPair>> {
    let mut pairs = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let pair = serde_json::from_str(&line)
            .with_context(|| format!("{} line {}", path.display(), i + 1))?;
        pairs.push(pair);
    }
    Ok(pairs)
}

pub fn distribution(args: DistributionArgs) -> Result<()> {
    let pairs = read_pairs(&args.pairs)?;
    let records = read_records(open(&args.lexicon)?)
        .with_context(|| format!("{}", args.lexicon.display()))?;
    let inventory = match &args.inventory {
        Some(p) => SenseInventory::load(p)?,
        None => SenseInventory::default(),
    };
    let m = distribution_matrix(&pairs, &sense_lexicon(&records), &inventory, args.order.into())?;
    if args.json {
        print_json(&m.to_json());
    } else {
        print!("{}", m.render_table());
    }
    Ok(())
}

pub fn train_embeddings(args: TrainArgs) -> Result<()> {
    let tok = TokenizerConfig {
        lowercase: args.lowercase,
    };
    let corpus: Vec<Vec<String>> = match args.format {
        CorpusFormat::Text => open(&args.input)?
            .lines()
            .map(|l| l.map(|l| tokenize_with(&l, tok)))
            .collect::<std::io::Result<_>>()?,
        CorpusFormat::Reviews => read_reviews(open(&args.input)?)?
            .iter()
            .map(|r| tokenize_with(&r.text, tok))
            .collect(),
    };
    let config = SkipGramConfig {
        dim: args.dim,
        window: args.window,
        negatives: args.negatives,
        epochs: args.epochs,
        lr: args.lr,
        min_count: args.min_count,
        seed: args.seed,
    };
    let table = train(&corpus, &config)?;
    let mut w = create(&args.output)?;
    write_embeddings(&mut w, &table)?;
    w.flush()?;
    if args.json {
        print_json(&json!({"vocabulary": table.len(), "dim": table.dim(), "output": args.output}));
    } else {
        println!("{} vectors of dimension {} written to {}", table.len(), table.dim(), args.output.display());
    }
    Ok(())
}

pub fn featurize(args: FeaturizeArgs) -> Result<()> {
    let config = ExperimentConfig::load(&args.config)?;
    let data = ExperimentData::load(&config.data, config.run.lowercase)?;
    let set = args.set.into();
    let (dataset, flagged) = featurize_reviews(&data, set, &config.run)?;
    if let Some(p) = &args.output {
        let mut w = create(p)?;
        for (i, review) in data.reviews.iter().enumerate() {
            let row = json!({
                "id": review.id,
                "label": review.label,
                "features": dataset.row(i),
            });
            serde_json::to_writer(&mut w, &row)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
    }
    let dim = FeatureLayout::new(data.embeddings.dim(), set.config()).len();
    if args.json {
        print_json(&json!({"reviews": dataset.len(), "dim": dim, "flagged": flagged, "feature_set": set}));
    } else {
        println!("reviews: {}", dataset.len());
        println!("dim: {dim}");
        println!("flagged (no known token): {flagged}");
    }
    Ok(())
}

pub fn experiment(args: ExperimentArgs) -> Result<()> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(n) = args.seeds {
        if n == 0 {
            bail!("--seeds must be at least 1");
        }
        config.run.seeds = (0..n).collect();
    }
    if !args.classifiers.is_empty() {
        config.run.classifiers = args.classifiers.iter().map(|&c| c.into()).collect();
    }
    if !args.feature_sets.is_empty() {
        config.run.feature_sets = args.feature_sets.iter().map(|&s| s.into()).collect();
    }
    let data = ExperimentData::load(&config.data, config.run.lowercase)?;
    let report = run_experiment(&data, &config.run)?;
    if args.json {
        print_json(&report.to_json());
    } else {
        println!("Accuracy (%)");
        print!("{}", report.render_accuracy_table());
        if report.classifiers.contains(&ClassifierKind::Mlp) {
            println!();
            println!("Neural network, macro averages");
            print!("{}", report.render_mlp_table());
        }
    }
    Ok(())
}
