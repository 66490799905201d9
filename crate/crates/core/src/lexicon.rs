//! Lexicon entries, annotations and adjudication.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inventory::{SenseInventory, UNCERTAIN};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WordId(pub String);

impl fmt::Display for WordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnnotatorId(pub String);

impl fmt::Display for AnnotatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartOfSpeech {
    Verb,
    Adverb,
    Adjective,
}

impl PartOfSpeech {
    pub fn as_str(self) -> &'static str {
        match self {
            PartOfSpeech::Verb => "verb",
            PartOfSpeech::Adverb => "adverb",
            PartOfSpeech::Adjective => "adjective",
        }
    }
}

impl std::str::FromStr for PartOfSpeech {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "verb" => Ok(PartOfSpeech::Verb),
            "adverb" => Ok(PartOfSpeech::Adverb),
            "adjective" => Ok(PartOfSpeech::Adjective),
            other => Err(format!("unknown part of speech `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnotationKind {
    Sense,
    Polarity,
}

impl AnnotationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AnnotationKind::Sense => "sense",
            AnnotationKind::Polarity => "polarity",
        }
    }
}

impl std::str::FromStr for AnnotationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sense" => Ok(AnnotationKind::Sense),
            "polarity" => Ok(AnnotationKind::Polarity),
            other => Err(format!("unknown annotation kind `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryStatus {
    PendingReview,
    Active,
    FlaggedUncertain,
    Removed,
}

impl std::str::FromStr for EntryStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pending_review" => Ok(EntryStatus::PendingReview),
            "active" => Ok(EntryStatus::Active),
            "flagged_uncertain" => Ok(EntryStatus::FlaggedUncertain),
            "removed" => Ok(EntryStatus::Removed),
            other => Err(format!("unknown status `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub annotator_id: AnnotatorId,
    pub kind: AnnotationKind,
    pub primary_tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary_tag: Option<String>,
    pub timestamp: i64,
}

impl Annotation {
    pub fn is_uncertain(&self) -> bool {
        self.primary_tag == UNCERTAIN
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotator {
    pub annotator_id: AnnotatorId,
    pub name: String,
    pub email: String,
    pub profession: String,
    pub education: String,
    /// Proficiency score in `0..=10`.
    pub score: u8,
    pub registered_at: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Unanimous,
    ScoreWin,
    NeedsReview,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedTags {
    pub primary_tag: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary_tag: Option<String>,
    pub resolution: Resolution,
}

impl ResolvedTags {
    fn winner(pair: &TagPair, resolution: Resolution) -> Self {
        ResolvedTags {
            primary_tag: Some(pair.0.clone()),
            secondary_tag: pair.1.clone(),
            resolution,
        }
    }

    fn needs_review() -> Self {
        ResolvedTags {
            primary_tag: None,
            secondary_tag: None,
            resolution: Resolution::NeedsReview,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub word_id: WordId,
    pub surface: String,
    pub pos: PartOfSpeech,
    pub gloss: String,
    pub example: String,
    #[serde(default)]
    pub annotations: Vec<Annotation>,
    /// Adjudicated tags, one slot per annotation kind.
    #[serde(default)]
    pub resolved: BTreeMap<AnnotationKind, ResolvedTags>,
    pub status: EntryStatus,
}

impl LexiconEntry {
    pub fn new(
        word_id: WordId,
        surface: impl Into<String>,
        pos: PartOfSpeech,
        gloss: impl Into<String>,
        example: impl Into<String>,
    ) -> Self {
        LexiconEntry {
            word_id,
            surface: surface.into(),
            pos,
            gloss: gloss.into(),
            example: example.into(),
            annotations: Vec::new(),
            resolved: BTreeMap::new(),
            status: EntryStatus::Active,
        }
    }

    pub fn annotations_of(&self, kind: AnnotationKind) -> impl Iterator<Item = &Annotation> {
        self.annotations.iter().filter(move |a| a.kind == kind)
    }

    pub fn annotation_count(&self, kind: AnnotationKind) -> usize {
        self.annotations_of(kind).count()
    }

    pub fn has_annotation_from(&self, annotator: &AnnotatorId, kind: AnnotationKind) -> bool {
        self.annotations_of(kind)
            .any(|a| &a.annotator_id == annotator)
    }

    /// Stores an annotation, replacing any earlier one by the same annotator
    /// for the same kind. Returns the replaced annotation.
    pub fn upsert_annotation(&mut self, annotation: Annotation) -> Option<Annotation> {
        match self
            .annotations
            .iter_mut()
            .find(|a| a.annotator_id == annotation.annotator_id && a.kind == annotation.kind)
        {
            Some(slot) => Some(std::mem::replace(slot, annotation)),
            None => {
                self.annotations.push(annotation);
                None
            }
        }
    }

    pub fn resolved(&self, kind: AnnotationKind) -> Option<&ResolvedTags> {
        self.resolved.get(&kind)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ValidationError {
    #[error("tag `{tag}` is not allowed for a {pos} {kind} annotation")]
    WrongTagSet {
        tag: String,
        pos: &'static str,
        kind: &'static str,
    },
    #[error("verb sense annotations need a secondary tag")]
    MissingSecondary,
    #[error("a secondary tag is only accepted for verb sense annotations")]
    UnexpectedSecondary,
}

/// Checks the tags of `annotation` against the inventory for `entry.pos`.
pub fn validate_annotation(
    annotation: &Annotation,
    entry: &LexiconEntry,
    inventory: &SenseInventory,
) -> Result<(), ValidationError> {
    let allowed = inventory.allowed_primary(annotation.kind, entry.pos);
    let wrong = |tag: &str| ValidationError::WrongTagSet {
        tag: tag.to_string(),
        pos: entry.pos.as_str(),
        kind: annotation.kind.as_str(),
    };
    if !allowed.iter().any(|t| *t == annotation.primary_tag) {
        return Err(wrong(&annotation.primary_tag));
    }
    match (
        inventory.allowed_secondary(annotation.kind, entry.pos),
        &annotation.secondary_tag,
    ) {
        (Some(_), None) => Err(ValidationError::MissingSecondary),
        (Some(options), Some(tag)) if !options.contains(tag) => Err(wrong(tag)),
        (None, Some(_)) => Err(ValidationError::UnexpectedSecondary),
        _ => Ok(()),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ResolveError {
    #[error("no annotations to resolve")]
    EmptyInput,
    #[error("unknown annotator `{0}`")]
    UnknownAnnotator(AnnotatorId),
    #[error("annotations of different kinds cannot be resolved together")]
    MixedKinds,
}

type TagPair = (String, Option<String>);

fn tag_pair(a: &Annotation) -> TagPair {
    (a.primary_tag.clone(), a.secondary_tag.clone())
}

/// Adjudicates the annotations of one kind for one word.
///
/// `Uncertain` annotations abstain. If the remaining annotations agree the
/// result is unanimous; otherwise the strictly highest-scoring annotator wins.
/// A disagreement among annotators sharing the top score needs review. The
/// (primary, secondary) pair is treated as one value throughout. When every
/// annotation is `Uncertain` the word resolves unanimously to `Uncertain`.
pub fn resolve(
    annotations: &[Annotation],
    annotators: &HashMap<AnnotatorId, Annotator>,
) -> Result<ResolvedTags, ResolveError> {
    let first = annotations.first().ok_or(ResolveError::EmptyInput)?;
    if annotations.iter().any(|a| a.kind != first.kind) {
        return Err(ResolveError::MixedKinds);
    }
    let unknown = annotations
        .iter()
        .map(|a| &a.annotator_id)
        .filter(|id| !annotators.contains_key(id))
        .min();
    if let Some(id) = unknown {
        return Err(ResolveError::UnknownAnnotator(id.clone()));
    }

    let decisive: Vec<&Annotation> = annotations.iter().filter(|a| !a.is_uncertain()).collect();
    if decisive.is_empty() {
        let has_secondary = annotations.iter().any(|a| a.secondary_tag.is_some());
        return Ok(ResolvedTags {
            primary_tag: Some(UNCERTAIN.to_string()),
            secondary_tag: has_secondary.then(|| UNCERTAIN.to_string()),
            resolution: Resolution::Unanimous,
        });
    }

    let distinct: BTreeSet<TagPair> = decisive.iter().map(|a| tag_pair(a)).collect();
    if distinct.len() == 1 {
        let pair = distinct.into_iter().next().unwrap();
        return Ok(ResolvedTags::winner(&pair, Resolution::Unanimous));
    }

    let score = |a: &Annotation| annotators[&a.annotator_id].score;
    let top = decisive.iter().map(|a| score(a)).max().unwrap();
    let leaders: BTreeSet<TagPair> = decisive
        .iter()
        .filter(|a| score(a) == top)
        .map(|a| tag_pair(a))
        .collect();
    if leaders.len() == 1 {
        let pair = leaders.into_iter().next().unwrap();
        Ok(ResolvedTags::winner(&pair, Resolution::ScoreWin))
    } else {
        Ok(ResolvedTags::needs_review())
    }
}

/// Thresholds deciding when a word counts as consistently uncertain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UncertaintyPolicy {
    pub threshold: f64,
    pub min_annotations: usize,
}

impl Default for UncertaintyPolicy {
    fn default() -> Self {
        UncertaintyPolicy {
            threshold: 0.5,
            min_annotations: 3,
        }
    }
}

/// True when at least `min_annotations` sense annotations exist and the
/// share of `Uncertain` primary tags among them reaches `threshold`.
pub fn uncertainty_flag(entry: &LexiconEntry, threshold: f64, min_annotations: usize) -> bool {
    let (uncertain, total) = entry
        .annotations_of(AnnotationKind::Sense)
        .fold((0usize, 0usize), |(u, n), a| (u + a.is_uncertain() as usize, n + 1));
    total >= min_annotations.max(1) && uncertain as f64 >= threshold * total as f64
}

impl UncertaintyPolicy {
    /// Moves an active entry to `flagged_uncertain` when the flag fires.
    /// Returns whether the entry is flagged afterwards.
    pub fn apply(&self, entry: &mut LexiconEntry) -> bool {
        let flagged = uncertainty_flag(entry, self.threshold, self.min_annotations);
        if flagged && entry.status == EntryStatus::Active {
            entry.status = EntryStatus::FlaggedUncertain;
        }
        entry.status == EntryStatus::FlaggedUncertain
    }
}

/// Resolved primary sense tags keyed by (part of speech, surface form).
///
/// Only decisive tags are kept: `Uncertain` and unresolved words are absent.
#[derive(Clone, Debug, Default)]
pub struct SenseLexicon {
    tags: BTreeMap<PartOfSpeech, HashMap<String, String>>,
}

impl SenseLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, pos: PartOfSpeech, surface: impl Into<String>, tag: impl Into<String>) {
        let tag = tag.into();
        if tag != UNCERTAIN {
            self.tags.entry(pos).or_default().insert(surface.into(), tag);
        }
    }

    pub fn lookup(&self, surface: &str, pos: PartOfSpeech) -> Option<&str> {
        self.tags.get(&pos)?.get(surface).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tags.values().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn count_pos(&self, pos: PartOfSpeech) -> usize {
        self.tags.get(&pos).map_or(0, HashMap::len)
    }

    /// Builds a lexicon from entries, using their resolved sense tags.
    pub fn from_entries<'a>(entries: impl IntoIterator<Item = &'a LexiconEntry>) -> Self {
        let mut lex = SenseLexicon::new();
        for entry in entries {
            if entry.status == EntryStatus::Removed {
                continue;
            }
            if let Some(tag) = entry
                .resolved(AnnotationKind::Sense)
                .and_then(|r| r.primary_tag.as_deref())
            {
                lex.insert(entry.pos, entry.surface.clone(), tag);
            }
        }
        lex
    }
}
