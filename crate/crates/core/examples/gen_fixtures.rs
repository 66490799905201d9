//! Regenerates the synthetic sentiment fixtures under `fixtures/sentiment/`.
//!
//! Reviews are mostly filler words. Each review also carries a few verbs and
//! adverbs whose sense types lean towards its label, and a few polarity words
//! that lean more weakly. Every word gets an unrelated random embedding, so the
//! averaged vector only carries the label through individual word identities.
//!
//!     cargo run -p sensecrowd-core --example gen_fixtures [out_dir]

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sensecrowd_core::features::{write_embeddings, EmbeddingTable};
use sensecrowd_core::learners::experiment::Review;
use sensecrowd_core::learners::Label;
use sensecrowd_core::lexicon_file::{write_records, LexiconRecord, ResolvedRecord};
use sensecrowd_core::{AnnotationKind, EntryStatus, PartOfSpeech, SenseInventory, WordId};

const REVIEWS: usize = 500;
const DIM: usize = 200;
const FILLER: usize = 240;
const VERBS_PER_TYPE: usize = 10;
const ADVERBS_PER_CLASS: usize = 8;
const POLARITY_WORDS: usize = 12;
/// Probability that a sense word is drawn from the label's preferred half.
const SENSE_LEAN: f64 = 0.72;
const POLARITY_LEAN: f64 = 0.6;

const CONSONANTS: [&str; 16] = [
    "k", "g", "c", "j", "ṭ", "ḍ", "t", "d", "n", "p", "b", "m", "y", "r", "l", "v",
];
const VOWELS: [&str; 6] = ["a", "ā", "i", "u", "e", "o"];

/// Distinct pseudo-Telugu stems, three syllables each.
fn stems(count: usize, rng: &mut ChaCha8Rng, taken: &mut std::collections::HashSet<String>) -> Vec<String> {
    let mut out = Vec::new();
    while out.len() < count {
        let s: String = (0..3)
            .map(|_| format!("{}{}", CONSONANTS.choose(rng).unwrap(), VOWELS.choose(rng).unwrap()))
            .collect();
        if taken.insert(s.clone()) {
            out.push(s);
        }
    }
    out
}

fn main() -> std::io::Result<()> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/sentiment"));
    fs::create_dir_all(&out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2018);
    let inv = SenseInventory::default();
    let mut taken = std::collections::HashSet::new();

    let filler = stems(FILLER, &mut rng, &mut taken);
    let verbs: Vec<Vec<String>> = (0..inv.verb_types().len())
        .map(|_| {
            stems(VERBS_PER_TYPE, &mut rng, &mut taken)
                .into_iter()
                .map(|s| s + "āḍu")
                .collect()
        })
        .collect();
    let adverbs: Vec<Vec<String>> = (0..inv.adverb_classes().len())
        .map(|_| {
            stems(ADVERBS_PER_CLASS, &mut rng, &mut taken)
                .into_iter()
                .map(|s| s + "gā")
                .collect()
        })
        .collect();
    let positive = stems(POLARITY_WORDS, &mut rng, &mut taken);
    let negative = stems(POLARITY_WORDS, &mut rng, &mut taken);

    // Sense lexicon.
    let mut records = Vec::new();
    let mut next_id = 1;
    let mut push = |surface: &str, pos: PartOfSpeech, tag: &str| {
        records.push(LexiconRecord {
            word_id: WordId(format!("s{next_id:06}")),
            surface: surface.to_string(),
            pos,
            gloss: format!("{} word", tag),
            example: surface.to_string(),
            resolved: Some(ResolvedRecord {
                kind: AnnotationKind::Sense,
                primary: tag.to_string(),
                secondary: None,
            }),
            status: EntryStatus::Active,
        });
        next_id += 1;
    };
    for (t, words) in verbs.iter().enumerate() {
        for w in words {
            push(w, PartOfSpeech::Verb, &inv.verb_types()[t]);
        }
    }
    for (c, words) in adverbs.iter().enumerate() {
        for w in words {
            push(w, PartOfSpeech::Adverb, &inv.adverb_classes()[c]);
        }
    }
    write_records(BufWriter::new(File::create(out.join("senses.jsonl"))?), &records)?;

    // Polarity lexicons.
    let mut uni = BufWriter::new(File::create(out.join("polarity_unigrams.tsv"))?);
    for w in &positive {
        writeln!(uni, "{w}\tpos")?;
    }
    for w in &negative {
        writeln!(uni, "{w}\tneg")?;
    }
    let mut bi = BufWriter::new(File::create(out.join("polarity_bigrams.tsv"))?);
    let (pos_bigrams, neg_bigrams): (Vec<_>, Vec<_>) = (
        positive[..4].iter().map(|w| ("cālā".to_string(), w.clone())).collect(),
        negative[..4].iter().map(|w| ("cālā".to_string(), w.clone())).collect(),
    );
    for (a, b) in &pos_bigrams {
        writeln!(bi, "{a} {b}\tpos")?;
    }
    for (a, b) in &neg_bigrams {
        writeln!(bi, "{a} {b}\tneg")?;
    }

    // Reviews. Positive reviews prefer the first half of each sense list.
    let half_v = inv.verb_types().len() / 2 + 1;
    let half_a = inv.adverb_classes().len() / 2;
    let mut reviews = BufWriter::new(File::create(out.join("reviews.jsonl"))?);
    for i in 0..REVIEWS {
        let pos = i % 2 == 0;
        let len = rng.gen_range(14..=26);
        let mut words: Vec<String> = (0..len).map(|_| filler.choose(&mut rng).unwrap().clone()).collect();
        for _ in 0..rng.gen_range(3..=5) {
            let lean = rng.gen_bool(SENSE_LEAN) == pos;
            let t = if lean { rng.gen_range(0..half_v) } else { rng.gen_range(half_v..verbs.len()) };
            words.push(verbs[t].choose(&mut rng).unwrap().clone());
        }
        for _ in 0..rng.gen_range(1..=3) {
            let lean = rng.gen_bool(SENSE_LEAN) == pos;
            let c = if lean { rng.gen_range(0..half_a) } else { rng.gen_range(half_a..adverbs.len()) };
            words.push(adverbs[c].choose(&mut rng).unwrap().clone());
        }
        for _ in 0..rng.gen_range(0..=2) {
            let list = if rng.gen_bool(POLARITY_LEAN) == pos { &positive } else { &negative };
            words.push(list.choose(&mut rng).unwrap().clone());
        }
        words.shuffle(&mut rng);
        if rng.gen_bool(0.3) {
            let list = if rng.gen_bool(POLARITY_LEAN) == pos { &pos_bigrams } else { &neg_bigrams };
            let (a, b) = list.choose(&mut rng).unwrap();
            let at = rng.gen_range(0..=words.len());
            words.splice(at..at, [a.clone(), b.clone()]);
        }
        let mut text = words.join(" ");
        text.push('.');
        let review = Review {
            id: format!("r{:04}", i + 1),
            text,
            label: if pos { Label::Positive } else { Label::Negative },
        };
        serde_json::to_writer(&mut reviews, &review)?;
        writeln!(reviews)?;
    }

    // Embeddings: one unrelated random vector per vocabulary word.
    let mut vocab: Vec<&String> = filler.iter().collect();
    vocab.extend(verbs.iter().flatten());
    vocab.extend(adverbs.iter().flatten());
    vocab.extend(positive.iter().chain(&negative));
    let cala = "cālā".to_string();
    vocab.push(&cala);
    let mut table = EmbeddingTable::new(DIM);
    for w in vocab {
        let v: Vec<f32> = (0..DIM)
            .map(|_| (rng.gen_range(-1.0f32..1.0) * 1e4).round() / 1e4)
            .collect();
        table.insert(w.as_str(), &v);
    }
    write_embeddings(BufWriter::new(File::create(out.join("embeddings.txt"))?), &table)?;
    Ok(())
}
