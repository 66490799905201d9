//! Review featurization: averaged embeddings, word-level polarity counts and
//! sense-tag counts.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inventory::SenseInventory;
use crate::lexicon::{PartOfSpeech, SenseLexicon};

pub const POLARITY_FEATURES: usize = 4;
pub const SENSE_FEATURES: usize = 11;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    /// Fold tokens to lower case. Off by default.
    #[serde(default)]
    pub lowercase: bool,
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '“' | '”' | '‘' | '’' | '«' | '»' | '…' | '–' | '—' | '।' | '॥' | '¡' | '¿' | '、' | '。'
        )
}

/// Splits on Unicode whitespace and strips punctuation from both ends of each
/// token. Tokens that are all punctuation disappear.
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_with(text, TokenizerConfig::default())
}

pub fn tokenize_with(text: &str, config: TokenizerConfig) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(is_punctuation))
        .filter(|t| !t.is_empty())
        .map(|t| if config.lowercase { t.to_lowercase() } else { t.to_string() })
        .collect()
}

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("bad embedding header: {0}")]
    HeaderMismatch(String),
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: invalid number `{value}`")]
    InvalidNumber { line: usize, value: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Word vectors of a fixed dimensionality, kept in insertion order.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f32>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        EmbeddingTable {
            dim,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Inserts or overwrites a vector. Returns true if the word was present.
    pub fn insert(&mut self, word: impl Into<String>, vector: &[f32]) -> bool {
        assert_eq!(vector.len(), self.dim, "vector length must equal dim");
        let word = word.into();
        match self.index.get(&word) {
            Some(&i) => {
                self.data[i * self.dim..(i + 1) * self.dim].copy_from_slice(vector);
                true
            }
            None => {
                self.index.insert(word.clone(), self.words.len());
                self.words.push(word);
                self.data.extend_from_slice(vector);
                false
            }
        }
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.index
            .get(word)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    /// Multiplies every vector by `factor`.
    pub fn scale(&mut self, factor: f32) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }
}

/// Reads the text interchange format: a `<count> <dim>` header followed by
/// `count` lines of `word v1 .. vdim`. Duplicate words keep the last vector.
pub fn load_embeddings(reader: impl BufRead) -> Result<EmbeddingTable, EmbeddingError> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| EmbeddingError::HeaderMismatch("missing header".into()))??;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let parse = |s: &str| s.parse::<usize>().ok();
    let (count, dim) = match fields.as_slice() {
        [c, d] => match (parse(c), parse(d)) {
            (Some(c), Some(d)) if d > 0 => (c, d),
            _ => return Err(EmbeddingError::HeaderMismatch(header.clone())),
        },
        _ => return Err(EmbeddingError::HeaderMismatch(header.clone())),
    };
    let mut table = EmbeddingTable::new(dim);
    let mut seen = 0usize;
    let mut vector = Vec::with_capacity(dim);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().unwrap_or_default();
        vector.clear();
        for value in parts {
            let v = value.parse::<f32>().map_err(|_| EmbeddingError::InvalidNumber {
                line: line_no,
                value: value.to_string(),
            })?;
            vector.push(v);
        }
        if vector.len() != dim {
            return Err(EmbeddingError::DimensionMismatch {
                line: line_no,
                expected: dim,
                found: vector.len(),
            });
        }
        if table.insert(word, &vector) {
            warn!("line {line_no}: duplicate embedding for `{word}`, keeping the last one");
        }
        seen += 1;
    }
    if seen != count {
        return Err(EmbeddingError::HeaderMismatch(format!(
            "header announces {count} vectors but {seen} were read"
        )));
    }
    Ok(table)
}

pub fn write_embeddings(mut writer: impl Write, table: &EmbeddingTable) -> std::io::Result<()> {
    writeln!(writer, "{} {}", table.len(), table.dim())?;
    for word in table.words() {
        write!(writer, "{word}")?;
        for v in table.get(word).unwrap() {
            write!(writer, " {v}")?;
        }
        writeln!(writer)?;
    }
    writer.flush()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReviewVector {
    pub values: Vec<f64>,
    pub in_vocabulary: usize,
    /// Set when no token had an embedding and `values` is the zero vector.
    pub flagged: bool,
}

/// Component-wise mean of the vectors of in-vocabulary tokens.
pub fn review_vector(tokens: &[String], table: &EmbeddingTable) -> ReviewVector {
    let mut values = vec![0.0f64; table.dim()];
    let mut hits = 0usize;
    for v in tokens.iter().filter_map(|t| table.get(t)) {
        hits += 1;
        values.iter_mut().zip(v).for_each(|(acc, &x)| *acc += x as f64);
    }
    if hits > 0 {
        values.iter_mut().for_each(|x| *x /= hits as f64);
    }
    ReviewVector {
        values,
        in_vocabulary: hits,
        flagged: hits == 0,
    }
}

#[derive(Debug, Error)]
pub enum PolarityError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("line {line}: `{entry}` is already listed with the opposite polarity")]
    Conflict { line: usize, entry: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Polarity {
    Positive,
    Negative,
}

fn parse_polarity(s: &str) -> Option<Polarity> {
    match s.trim() {
        "pos" => Some(Polarity::Positive),
        "neg" => Some(Polarity::Negative),
        _ => None,
    }
}

/// Positive and negative unigram and bigram sets.
#[derive(Clone, Debug, Default)]
pub struct PolarityLexicons {
    pub positive_unigrams: HashSet<String>,
    pub negative_unigrams: HashSet<String>,
    pub positive_bigrams: HashSet<(String, String)>,
    pub negative_bigrams: HashSet<(String, String)>,
}

impl PolarityLexicons {
    /// Reads `word<TAB>pos|neg` lines.
    pub fn read_unigrams(&mut self, reader: impl BufRead) -> Result<(), PolarityError> {
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (word, pol) = split_entry(&line, i + 1)?;
            if word.split_whitespace().count() != 1 {
                return Err(PolarityError::Format {
                    line: i + 1,
                    message: "a unigram entry must be a single word".into(),
                });
            }
            let (same, other) = match pol {
                Polarity::Positive => (&mut self.positive_unigrams, &self.negative_unigrams),
                Polarity::Negative => (&mut self.negative_unigrams, &self.positive_unigrams),
            };
            if other.contains(word) {
                return Err(PolarityError::Conflict {
                    line: i + 1,
                    entry: word.to_string(),
                });
            }
            same.insert(word.to_string());
        }
        Ok(())
    }

    /// Reads `w1<SPACE>w2<TAB>pos|neg` lines.
    pub fn read_bigrams(&mut self, reader: impl BufRead) -> Result<(), PolarityError> {
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (words, pol) = split_entry(&line, i + 1)?;
            let key = match words.split(' ').collect::<Vec<_>>().as_slice() {
                [a, b] if !a.is_empty() && !b.is_empty() => (a.to_string(), b.to_string()),
                _ => {
                    return Err(PolarityError::Format {
                        line: i + 1,
                        message: "a bigram entry must be two space-separated words".into(),
                    })
                }
            };
            let (same, other) = match pol {
                Polarity::Positive => (&mut self.positive_bigrams, &self.negative_bigrams),
                Polarity::Negative => (&mut self.negative_bigrams, &self.positive_bigrams),
            };
            if other.contains(&key) {
                return Err(PolarityError::Conflict {
                    line: i + 1,
                    entry: words.to_string(),
                });
            }
            same.insert(key);
        }
        Ok(())
    }
}

fn split_entry(line: &str, line_no: usize) -> Result<(&str, Polarity), PolarityError> {
    let (entry, pol) = line.split_once('\t').ok_or_else(|| PolarityError::Format {
        line: line_no,
        message: "expected `entry<TAB>pos|neg`".into(),
    })?;
    let pol = parse_polarity(pol).ok_or_else(|| PolarityError::Format {
        line: line_no,
        message: format!("polarity must be `pos` or `neg`, got `{pol}`"),
    })?;
    Ok((entry.trim(), pol))
}

/// `[positive unigrams, negative unigrams, positive bigrams, negative bigrams]`.
pub fn polarity_features(tokens: &[String], lexicons: &PolarityLexicons) -> [usize; POLARITY_FEATURES] {
    let mut counts = [0usize; POLARITY_FEATURES];
    for t in tokens {
        counts[0] += lexicons.positive_unigrams.contains(t) as usize;
        counts[1] += lexicons.negative_unigrams.contains(t) as usize;
    }
    if lexicons.positive_bigrams.is_empty() && lexicons.negative_bigrams.is_empty() {
        return counts;
    }
    for w in tokens.windows(2) {
        let key = (w[0].clone(), w[1].clone());
        counts[2] += lexicons.positive_bigrams.contains(&key) as usize;
        counts[3] += lexicons.negative_bigrams.contains(&key) as usize;
    }
    counts
}

/// Seven verb sense-type counts then four adverb sense-class counts, each in
/// inventory order. Words without a decisive tag contribute nothing.
pub fn ontosense_features(
    tokens: &[String],
    senses: &SenseLexicon,
    inventory: &SenseInventory,
) -> [usize; SENSE_FEATURES] {
    let verbs = inventory.verb_types().len();
    let mut counts = [0usize; SENSE_FEATURES];
    for t in tokens {
        if let Some(i) = senses
            .lookup(t, PartOfSpeech::Verb)
            .and_then(|tag| inventory.verb_index(tag))
        {
            counts[i] += 1;
        }
        if let Some(i) = senses
            .lookup(t, PartOfSpeech::Adverb)
            .and_then(|tag| inventory.adverb_index(tag))
        {
            counts[verbs + i] += 1;
        }
    }
    counts
}

/// Which feature groups follow the embedding average.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureConfig {
    #[serde(default)]
    pub use_polarity: bool,
    #[serde(default)]
    pub use_ontosense: bool,
    /// Divide appended counts by the review length in tokens.
    #[serde(default)]
    pub normalize_by_length: bool,
}

impl FeatureConfig {
    pub const BASE: FeatureConfig = FeatureConfig::new(false, false);
    pub const POLARITY: FeatureConfig = FeatureConfig::new(true, false);
    pub const ONTOSENSE: FeatureConfig = FeatureConfig::new(false, true);
    pub const BOTH: FeatureConfig = FeatureConfig::new(true, true);

    pub const fn new(use_polarity: bool, use_ontosense: bool) -> Self {
        FeatureConfig {
            use_polarity,
            use_ontosense,
            normalize_by_length: false,
        }
    }
}

/// Index layout of an assembled vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureLayout {
    pub dim: usize,
    pub polarity: bool,
    pub ontosense: bool,
}

impl FeatureLayout {
    pub fn new(dim: usize, config: FeatureConfig) -> Self {
        FeatureLayout {
            dim,
            polarity: config.use_polarity,
            ontosense: config.use_ontosense,
        }
    }

    pub fn len(&self) -> usize {
        self.dim
            + if self.polarity { POLARITY_FEATURES } else { 0 }
            + if self.ontosense { SENSE_FEATURES } else { 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn polarity_offset(&self) -> Option<usize> {
        self.polarity.then_some(self.dim)
    }

    pub fn ontosense_offset(&self) -> Option<usize> {
        self.ontosense
            .then(|| self.dim + if self.polarity { POLARITY_FEATURES } else { 0 })
    }

    /// Feature names: `emb_<i>`, `pos_uni`, `neg_uni`, `pos_bi`, `neg_bi`,
    /// `verb:<type>` and `adverb:<class>`.
    pub fn names(&self, inventory: &SenseInventory) -> Vec<String> {
        let mut names: Vec<String> = (0..self.dim).map(|i| format!("emb_{i}")).collect();
        if self.polarity {
            names.extend(["pos_uni", "neg_uni", "pos_bi", "neg_bi"].map(String::from));
        }
        if self.ontosense {
            names.extend(inventory.verb_types().iter().map(|t| format!("verb:{t}")));
            names.extend(inventory.adverb_classes().iter().map(|c| format!("adverb:{c}")));
        }
        names
    }

    pub fn index_of(&self, name: &str, inventory: &SenseInventory) -> Option<usize> {
        self.names(inventory).iter().position(|n| n == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout: FeatureLayout,
    /// The review had no in-vocabulary token.
    pub flagged: bool,
}

/// Read-only resources needed to featurize reviews.
#[derive(Clone, Copy)]
pub struct FeatureContext<'a> {
    pub embeddings: &'a EmbeddingTable,
    pub polarity: &'a PolarityLexicons,
    pub senses: &'a SenseLexicon,
    pub inventory: &'a SenseInventory,
}

/// Concatenates the embedding average, then the polarity counts, then the
/// sense counts, as selected by `config`.
pub fn assemble(tokens: &[String], ctx: &FeatureContext<'_>, config: FeatureConfig) -> FeatureVector {
    let layout = FeatureLayout::new(ctx.embeddings.dim(), config);
    let review = review_vector(tokens, ctx.embeddings);
    let mut values = review.values;
    values.reserve(layout.len() - layout.dim);
    let scale = if config.normalize_by_length && !tokens.is_empty() {
        1.0 / tokens.len() as f64
    } else {
        1.0
    };
    if config.use_polarity {
        values.extend(
            polarity_features(tokens, ctx.polarity)
                .iter()
                .map(|&c| c as f64 * scale),
        );
    }
    if config.use_ontosense {
        values.extend(
            ontosense_features(tokens, ctx.senses, ctx.inventory)
                .iter()
                .map(|&c| c as f64 * scale),
        );
    }
    debug_assert_eq!(values.len(), layout.len());
    FeatureVector {
        values,
        layout,
        flagged: review.flagged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenizer_examples() {
        assert_eq!(tokenize("a b  c"), toks(&["a", "b", "c"]));
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("x, y."), toks(&["x", "y"]));
        assert_eq!(tokenize("“cālā” -- bāgundi।"), toks(&["cālā", "bāgundi"]));
        assert_eq!(tokenize("Good"), toks(&["Good"]));
        assert_eq!(
            tokenize_with("Good BAD", TokenizerConfig { lowercase: true }),
            toks(&["good", "bad"])
        );
        // Telugu vowel signs are not punctuation and must survive.
        assert_eq!(tokenize("బాగుంది."), toks(&["బాగుంది"]));
    }

    #[test]
    fn loads_small_table() {
        let t = load_embeddings("2 3\na 1 2 3\nb 4 5 6\n".as_bytes()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("b"), Some(&[4.0, 5.0, 6.0][..]));
    }

    #[test]
    fn short_row_is_dimension_mismatch() {
        assert!(matches!(
            load_embeddings("2 3\na 1 2 3\nb 4 5\n".as_bytes()),
            Err(EmbeddingError::DimensionMismatch { line: 3, expected: 3, found: 2 })
        ));
    }

    #[test]
    fn header_problems() {
        assert!(matches!(
            load_embeddings("".as_bytes()),
            Err(EmbeddingError::HeaderMismatch(_))
        ));
        assert!(matches!(
            load_embeddings("2\n".as_bytes()),
            Err(EmbeddingError::HeaderMismatch(_))
        ));
        assert!(matches!(
            load_embeddings("3 2\na 1 2\n".as_bytes()),
            Err(EmbeddingError::HeaderMismatch(_))
        ));
        assert!(matches!(
            load_embeddings("1 2\na 1 x\n".as_bytes()),
            Err(EmbeddingError::InvalidNumber { line: 2, .. })
        ));
    }

    #[test]
    fn duplicate_word_last_wins() {
        let t = load_embeddings("2 2\na 1 2\na 3 4\n".as_bytes()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get("a"), Some(&[3.0, 4.0][..]));
    }

    #[test]
    fn write_then_read() {
        let mut t = EmbeddingTable::new(2);
        t.insert("x", &[0.1, -2.5e-7]);
        t.insert("y", &[3.0, 1.0 / 3.0]);
        let mut buf = Vec::new();
        write_embeddings(&mut buf, &t).unwrap();
        assert_eq!(load_embeddings(&buf[..]).unwrap(), t);
    }

    #[test]
    fn review_vector_cases() {
        let mut t = EmbeddingTable::new(2);
        t.insert("a", &[1.0, 3.0]);
        t.insert("b", &[3.0, 5.0]);
        let r = review_vector(&toks(&["a", "zz", "b"]), &t);
        assert_eq!(r.values, vec![2.0, 4.0]);
        assert_eq!(r.in_vocabulary, 2);
        assert!(!r.flagged);
        let r = review_vector(&toks(&["b"]), &t);
        assert_eq!(r.values, vec![3.0, 5.0]);
        let r = review_vector(&toks(&["q", "r"]), &t);
        assert_eq!(r.values, vec![0.0, 0.0]);
        assert!(r.flagged);
    }

    fn lexicons() -> PolarityLexicons {
        let mut l = PolarityLexicons::default();
        l.read_unigrams("good\tpos\nbad\tneg\n".as_bytes()).unwrap();
        l.read_bigrams("not good\tneg\nvery good\tpos\n".as_bytes()).unwrap();
        l
    }

    #[test]
    fn polarity_counts() {
        let l = lexicons();
        assert_eq!(polarity_features(&toks(&["good", "good", "bad"]), &l), [2, 1, 0, 0]);
        assert_eq!(polarity_features(&[], &l), [0, 0, 0, 0]);
        assert_eq!(polarity_features(&toks(&["not", "good"]), &l), [1, 0, 0, 1]);
        assert_eq!(polarity_features(&toks(&["very", "good"]), &l), [1, 0, 1, 0]);
    }

    #[test]
    fn polarity_file_errors() {
        let mut l = lexicons();
        assert!(matches!(
            l.read_unigrams("good\tneg\n".as_bytes()),
            Err(PolarityError::Conflict { line: 1, .. })
        ));
        assert!(matches!(
            l.read_unigrams("good pos\n".as_bytes()),
            Err(PolarityError::Format { .. })
        ));
        assert!(matches!(
            l.read_bigrams("notgood\tneg\n".as_bytes()),
            Err(PolarityError::Format { .. })
        ));
        assert!(matches!(
            l.read_bigrams("not good\tpos\n".as_bytes()),
            Err(PolarityError::Conflict { .. })
        ));
        assert!(matches!(
            l.read_unigrams("meh\tneutral\n".as_bytes()),
            Err(PolarityError::Format { .. })
        ));
    }

    fn senses() -> SenseLexicon {
        let mut s = SenseLexicon::new();
        s.insert(PartOfSpeech::Verb, "naḍicāḍu", "ToMove");
        s.insert(PartOfSpeech::Verb, "parigettāḍu", "ToMove");
        s.insert(PartOfSpeech::Adverb, "cālā", "Measure");
        s.insert(PartOfSpeech::Verb, "telusu", crate::UNCERTAIN);
        s
    }

    #[test]
    fn sense_counts() {
        let inv = SenseInventory::default();
        let t = toks(&["vāḍu", "naḍicāḍu", "cālā", "parigettāḍu"]);
        assert_eq!(
            ontosense_features(&t, &senses(), &inv),
            [0, 2, 0, 0, 0, 0, 0, 0, 0, 0, 1]
        );
        assert_eq!(ontosense_features(&toks(&["x", "y"]), &senses(), &inv), [0; 11]);
        assert_eq!(ontosense_features(&toks(&["telusu"]), &senses(), &inv), [0; 11]);
    }

    #[test]
    fn assembled_lengths_and_layout() {
        let mut table = EmbeddingTable::new(200);
        table.insert("naḍicāḍu", &[0.5; 200]);
        let inv = SenseInventory::default();
        let (pol, sen) = (lexicons(), senses());
        let ctx = FeatureContext {
            embeddings: &table,
            polarity: &pol,
            senses: &sen,
            inventory: &inv,
        };
        let t = toks(&["good", "naḍicāḍu", "cālā"]);
        let lens: Vec<usize> = [
            FeatureConfig::BASE,
            FeatureConfig::POLARITY,
            FeatureConfig::ONTOSENSE,
            FeatureConfig::BOTH,
        ]
        .iter()
        .map(|c| assemble(&t, &ctx, *c).values.len())
        .collect();
        assert_eq!(lens, [200, 204, 211, 215]);

        let both = assemble(&t, &ctx, FeatureConfig::BOTH);
        let at = |name: &str| both.values[both.layout.index_of(name, &inv).unwrap()];
        assert_eq!(at("pos_uni"), 1.0);
        assert_eq!(at("verb:ToMove"), 1.0);
        assert_eq!(at("adverb:Measure"), 1.0);
        assert_eq!(at("emb_199"), 0.5);
        assert_eq!(both.layout.ontosense_offset(), Some(204));
        let only = FeatureLayout::new(200, FeatureConfig::ONTOSENSE);
        assert_eq!(only.ontosense_offset(), Some(200));
        assert_eq!(only.index_of("verb:ToKnow", &inv), Some(200));
        assert_eq!(only.index_of("pos_uni", &inv), None);

        let norm = assemble(
            &t,
            &ctx,
            FeatureConfig {
                normalize_by_length: true,
                ..FeatureConfig::ONTOSENSE
            },
        );
        assert!((norm.values[201] - 1.0 / 3.0).abs() < 1e-15);
    }
}
