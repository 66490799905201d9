//! POS-tagged corpus ingestion, adverb/verb pair extraction and the adverb
//! sense-class by verb sense-type distribution.
//!
//! The corpus format is one `surface<TAB>tag` token per line with sentences
//! separated by blank lines.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inventory::SenseInventory;
use crate::lexicon::{PartOfSpeech, SenseLexicon};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("line {line}: tag `{tag}` has no category mapping")]
    UnknownTag { line: usize, tag: String },
    #[error("the sense lexicon has no verb or adverb entries")]
    EmptyLexicon,
    #[error("malformed tagset file: {0}")]
    Tagset(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagCategory {
    Verb,
    Adverb,
    Other,
}

/// Maps tagger tags onto the three categories the pair extractor needs.
#[derive(Clone, Debug)]
pub struct Tagset {
    map: HashMap<String, TagCategory>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TagsetFile {
    #[serde(default)]
    verb: Vec<String>,
    #[serde(default)]
    adverb: Vec<String>,
    #[serde(default)]
    other: Vec<String>,
}

// BIS tags used by Telugu taggers, plus the Penn-style tags.
const DEFAULT_VERB_TAGS: &[&str] = &[
    "V_VM", "V_VM_VF", "V_VM_VNF", "V_VM_VINF", "V_VM_VNG", "V_VN", "V_VAUX", "VM", "VAUX", "VB",
    "VBD", "VBG", "VBN", "VBP", "VBZ",
];
const DEFAULT_ADVERB_TAGS: &[&str] = &["RB", "RBR", "RBS", "RB_AMN", "RB_ALC"];
const DEFAULT_OTHER_TAGS: &[&str] = &[
    "N_NN", "N_NNP", "N_NNV", "N_NST", "NN", "NNP", "NNS", "NST", "PR_PRP", "PR_PRF", "PR_PRL",
    "PR_PRC", "PR_PRQ", "PRP", "DM_DMD", "DM_DMR", "DM_DMQ", "DT", "JJ", "JJR", "JJS", "CC",
    "CC_CCD", "CC_CCS", "PSP", "RP_RPD", "RP_INJ", "RP_INTF", "RP_NEG", "RP", "INTF", "NEG", "QT_QTF",
    "QT_QTC", "QT_QTO", "QC", "QF", "QO", "RD_RDF", "RD_SYM", "RD_PUNC", "RD_UNK", "RD_ECH", "SYM",
    "PUNC", "UNK", "ECH", "IN", "CD", "TO", "UT", "WQ",
];

impl Default for Tagset {
    fn default() -> Self {
        let mut map = HashMap::new();
        for (tags, cat) in [
            (DEFAULT_VERB_TAGS, TagCategory::Verb),
            (DEFAULT_ADVERB_TAGS, TagCategory::Adverb),
            (DEFAULT_OTHER_TAGS, TagCategory::Other),
        ] {
            for t in tags {
                map.insert(t.to_string(), cat);
            }
        }
        Tagset { map }
    }
}

impl Tagset {
    pub fn from_toml_str(text: &str) -> Result<Self, CorpusError> {
        let file: TagsetFile = toml::from_str(text)?;
        let mut map = HashMap::new();
        for (tags, cat) in [
            (file.verb, TagCategory::Verb),
            (file.adverb, TagCategory::Adverb),
            (file.other, TagCategory::Other),
        ] {
            for t in tags {
                map.insert(t, cat);
            }
        }
        Ok(Tagset { map })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn category(&self, tag: &str) -> Option<TagCategory> {
        self.map.get(tag).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaggedToken {
    pub surface: String,
    pub tag: String,
    pub category: TagCategory,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaggedSentence {
    pub tokens: Vec<TaggedToken>,
}

/// Reads a tagged corpus. With `strict` set, tags missing from the tagset are
/// an error; otherwise they map to [`TagCategory::Other`].
pub fn parse_tagged_corpus(
    reader: impl BufRead,
    tagset: &Tagset,
    strict: bool,
) -> Result<Vec<TaggedSentence>, CorpusError> {
    let mut sentences = Vec::new();
    let mut current = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(TaggedSentence {
                    tokens: std::mem::take(&mut current),
                });
            }
            continue;
        }
        let (surface, tag) = line.split_once('\t').ok_or_else(|| CorpusError::Format {
            line: line_no,
            message: "expected `surface<TAB>tag`".into(),
        })?;
        let (surface, tag) = (surface.trim(), tag.trim());
        if surface.is_empty() || tag.is_empty() || tag.contains('\t') {
            return Err(CorpusError::Format {
                line: line_no,
                message: "expected a non-empty surface and a single tag".into(),
            });
        }
        let category = match tagset.category(tag) {
            Some(c) => c,
            None if strict => {
                return Err(CorpusError::UnknownTag {
                    line: line_no,
                    tag: tag.to_string(),
                })
            }
            None => TagCategory::Other,
        };
        current.push(TaggedToken {
            surface: surface.to_string(),
            tag: tag.to_string(),
            category,
        });
    }
    if !current.is_empty() {
        sentences.push(TaggedSentence { tokens: current });
    }
    Ok(sentences)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairOrder {
    AdverbVerb,
    VerbAdverb,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BigramPair {
    pub adverb_surface: String,
    pub verb_surface: String,
    pub order: PairOrder,
    pub sentence_index: usize,
    /// Token index of the first word of the pair.
    pub position: usize,
}

/// Extracts every (adverb, verb) and (verb, adverb) token pair at most
/// `window` tokens apart; `window = 1` means adjacent bigrams. Output is
/// ordered by sentence, then first token, then second token.
pub fn extract_pairs(sentences: &[TaggedSentence], window: usize) -> Vec<BigramPair> {
    let mut pairs = Vec::new();
    for (s, sentence) in sentences.iter().enumerate() {
        let tokens = &sentence.tokens;
        for i in 0..tokens.len() {
            for j in (i + 1)..tokens.len().min(i + window + 1) {
                let (a, b) = (&tokens[i], &tokens[j]);
                let pair = match (a.category, b.category) {
                    (TagCategory::Adverb, TagCategory::Verb) => (a, b, PairOrder::AdverbVerb),
                    (TagCategory::Verb, TagCategory::Adverb) => (b, a, PairOrder::VerbAdverb),
                    _ => continue,
                };
                pairs.push(BigramPair {
                    adverb_surface: pair.0.surface.clone(),
                    verb_surface: pair.1.surface.clone(),
                    order: pair.2,
                    sentence_index: s,
                    position: i,
                });
            }
        }
    }
    pairs
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairOrderStats {
    pub adverb_verb_count: usize,
    pub verb_adverb_count: usize,
}

pub fn pair_order_stats(pairs: &[BigramPair]) -> PairOrderStats {
    pairs.iter().fold(PairOrderStats::default(), |mut s, p| {
        match p.order {
            PairOrder::AdverbVerb => s.adverb_verb_count += 1,
            PairOrder::VerbAdverb => s.verb_adverb_count += 1,
        }
        s
    })
}

/// Which pair orders feed the distribution matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderFilter {
    #[default]
    Pooled,
    AdverbVerbOnly,
    VerbAdverbOnly,
}

impl OrderFilter {
    fn admits(self, order: PairOrder) -> bool {
        match self {
            OrderFilter::Pooled => true,
            OrderFilter::AdverbVerbOnly => order == PairOrder::AdverbVerb,
            OrderFilter::VerbAdverbOnly => order == PairOrder::VerbAdverb,
        }
    }
}

/// Counts of adverb sense-classes (rows) against verb sense-types (columns).
///
/// Percentages are exact rationals; rounding happens only in [`Self::render_table`].
/// `counts` total plus `skipped` plus `excluded` equals the number of pairs given.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistributionMatrix {
    pub row_labels: Vec<String>,
    pub column_labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    pub row_totals: Vec<u64>,
    /// Pairs whose adverb or verb has no decisive sense tag.
    pub skipped: u64,
    /// Pairs dropped by the order filter.
    pub excluded: u64,
}

impl DistributionMatrix {
    /// Exact percentage for a cell; zero for empty rows.
    pub fn percentage(&self, row: usize, col: usize) -> Ratio<u64> {
        match self.row_totals[row] {
            0 => Ratio::from_integer(0),
            total => Ratio::new(100 * self.counts[row][col], total),
        }
    }

    pub fn percentages(&self) -> Vec<Vec<Ratio<u64>>> {
        (0..self.row_labels.len())
            .map(|r| (0..self.column_labels.len()).map(|c| self.percentage(r, c)).collect())
            .collect()
    }

    pub fn is_row_empty(&self, row: usize) -> bool {
        self.row_totals[row] == 0
    }

    pub fn total_counted(&self) -> u64 {
        self.row_totals.iter().sum()
    }

    /// Fixed-width text table with one-decimal percentages, rounded half up.
    pub fn render_table(&self) -> String {
        let row_width = self
            .row_labels
            .iter()
            .map(|l| l.chars().count())
            .max()
            .unwrap_or(0)
            .max(8);
        let col_width = self
            .column_labels
            .iter()
            .map(|l| l.chars().count())
            .max()
            .unwrap_or(0)
            .max(6);
        let mut out = String::new();
        let _ = write!(out, "{:row_width$}", "");
        for label in &self.column_labels {
            let _ = write!(out, " | {label:>col_width$}");
        }
        let _ = writeln!(out, " | {:>6}", "n");
        let rule_len = row_width + self.column_labels.len() * (col_width + 3) + 9;
        let _ = writeln!(out, "{}", "-".repeat(rule_len));
        for (r, label) in self.row_labels.iter().enumerate() {
            let _ = write!(out, "{label:row_width$}");
            for c in 0..self.column_labels.len() {
                let cell = format!("{}%", format_one_decimal(self.percentage(r, c)));
                let _ = write!(out, " | {cell:>col_width$}");
            }
            let _ = write!(out, " | {:>6}", self.row_totals[r]);
            if self.is_row_empty(r) {
                out.push_str("  (empty)");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "skipped (unannotated): {}", self.skipped);
        if self.excluded > 0 {
            let _ = writeln!(out, "excluded by order filter: {}", self.excluded);
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let percentages: Vec<Vec<f64>> = self
            .percentages()
            .iter()
            .map(|row| row.iter().map(|p| *p.numer() as f64 / *p.denom() as f64).collect())
            .collect();
        let empty_rows: Vec<&str> = self
            .row_labels
            .iter()
            .enumerate()
            .filter(|(r, _)| self.is_row_empty(*r))
            .map(|(_, l)| l.as_str())
            .collect();
        serde_json::json!({
            "rows": self.row_labels,
            "columns": self.column_labels,
            "counts": self.counts,
            "percentages": percentages,
            "row_totals": self.row_totals,
            "skipped": self.skipped,
            "excluded": self.excluded,
            "empty_rows": empty_rows,
        })
    }
}

/// Rounds a non-negative rational half up to one decimal place.
pub fn format_one_decimal(value: Ratio<u64>) -> String {
    let (n, d) = (*value.numer(), *value.denom());
    let tenths = (20 * n + d) / (2 * d);
    format!("{}.{}", tenths / 10, tenths % 10)
}

/// Builds the distribution matrix from pairs using each word's primary sense tag.
pub fn distribution_matrix(
    pairs: &[BigramPair],
    lexicon: &SenseLexicon,
    inventory: &SenseInventory,
    filter: OrderFilter,
) -> Result<DistributionMatrix, CorpusError> {
    if lexicon.count_pos(PartOfSpeech::Verb) + lexicon.count_pos(PartOfSpeech::Adverb) == 0 {
        return Err(CorpusError::EmptyLexicon);
    }
    let rows = inventory.adverb_classes().len();
    let cols = inventory.verb_types().len();
    let mut m = DistributionMatrix {
        row_labels: inventory.adverb_classes().to_vec(),
        column_labels: inventory.verb_types().to_vec(),
        counts: vec![vec![0; cols]; rows],
        row_totals: vec![0; rows],
        skipped: 0,
        excluded: 0,
    };
    for pair in pairs {
        if !filter.admits(pair.order) {
            m.excluded += 1;
            continue;
        }
        let row = lexicon
            .lookup(&pair.adverb_surface, PartOfSpeech::Adverb)
            .and_then(|t| inventory.adverb_index(t));
        let col = lexicon
            .lookup(&pair.verb_surface, PartOfSpeech::Verb)
            .and_then(|t| inventory.verb_index(t));
        match (row, col) {
            (Some(r), Some(c)) => {
                m.counts[r][c] += 1;
                m.row_totals[r] += 1;
            }
            _ => m.skipped += 1,
        }
    }
    Ok(m)
}
