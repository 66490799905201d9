//! Closed tag sets used by annotators.
//!
//! The inventory can be loaded from a TOML file mapping each list name to an
//! ordered label list. Keys that are absent keep their defaults.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{AnnotationKind, PartOfSpeech};

/// Abstention label available for every sense task and as the fourth polarity label.
pub const UNCERTAIN: &str = "Uncertain";

pub const VERB_TYPE_COUNT: usize = 7;
pub const ADVERB_CLASS_COUNT: usize = 4;
pub const ADJECTIVE_TYPE_COUNT: usize = 6;

const DEFAULT_VERB_TYPES: [&str; VERB_TYPE_COUNT] =
    ["ToKnow", "ToMove", "ToDo", "ToHave", "ToBe", "ToCut", "ToBound"];
const DEFAULT_ADVERB_CLASSES: [&str; ADVERB_CLASS_COUNT] =
    ["Spatial", "Temporal", "Force", "Measure"];
const DEFAULT_ADJECTIVE_TYPES: [&str; ADJECTIVE_TYPE_COUNT] =
    ["ADJ-1", "ADJ-2", "ADJ-3", "ADJ-4", "ADJ-5", "ADJ-6"];
const POLARITY_LABELS: [&str; 4] = ["Positive", "Negative", "Neutral", UNCERTAIN];

#[derive(Debug, Error)]
pub enum InventoryError {
    #[error("failed to read inventory file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed inventory file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("`{list}` must have exactly {expected} labels, found {found}")]
    WrongLength {
        list: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("`{list}` contains duplicate label `{label}`")]
    DuplicateLabel { list: &'static str, label: String },
    #[error("`{list}` may not use the reserved label `{UNCERTAIN}`")]
    ReservedLabel { list: &'static str },
    #[error("polarity labels are fixed to {POLARITY_LABELS:?}")]
    PolarityLabels,
}

/// The four ordered label lists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SenseInventory {
    verb_types: Vec<String>,
    adverb_classes: Vec<String>,
    adjective_types: Vec<String>,
    polarity_labels: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InventoryFile {
    verb_types: Option<Vec<String>>,
    adverb_classes: Option<Vec<String>>,
    adjective_types: Option<Vec<String>>,
    polarity_labels: Option<Vec<String>>,
}

fn owned(labels: &[&str]) -> Vec<String> {
    labels.iter().map(|s| s.to_string()).collect()
}

impl Default for SenseInventory {
    fn default() -> Self {
        SenseInventory {
            verb_types: owned(&DEFAULT_VERB_TYPES),
            adverb_classes: owned(&DEFAULT_ADVERB_CLASSES),
            adjective_types: owned(&DEFAULT_ADJECTIVE_TYPES),
            polarity_labels: owned(&POLARITY_LABELS),
        }
    }
}

impl SenseInventory {
    pub fn new(
        verb_types: Vec<String>,
        adverb_classes: Vec<String>,
        adjective_types: Vec<String>,
    ) -> Result<Self, InventoryError> {
        let inv = SenseInventory {
            verb_types,
            adverb_classes,
            adjective_types,
            polarity_labels: owned(&POLARITY_LABELS),
        };
        inv.check()?;
        Ok(inv)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, InventoryError> {
        let file: InventoryFile = toml::from_str(text)?;
        let defaults = SenseInventory::default();
        let inv = SenseInventory {
            verb_types: file.verb_types.unwrap_or(defaults.verb_types),
            adverb_classes: file.adverb_classes.unwrap_or(defaults.adverb_classes),
            adjective_types: file.adjective_types.unwrap_or(defaults.adjective_types),
            polarity_labels: file.polarity_labels.unwrap_or(defaults.polarity_labels),
        };
        inv.check()?;
        Ok(inv)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InventoryError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    fn check(&self) -> Result<(), InventoryError> {
        let lists: [(&'static str, &Vec<String>, usize); 3] = [
            ("verb_types", &self.verb_types, VERB_TYPE_COUNT),
            ("adverb_classes", &self.adverb_classes, ADVERB_CLASS_COUNT),
            ("adjective_types", &self.adjective_types, ADJECTIVE_TYPE_COUNT),
        ];
        for (list, labels, expected) in lists {
            if labels.len() != expected {
                return Err(InventoryError::WrongLength {
                    list,
                    expected,
                    found: labels.len(),
                });
            }
            let mut seen = HashSet::new();
            for label in labels {
                if label == UNCERTAIN {
                    return Err(InventoryError::ReservedLabel { list });
                }
                if !seen.insert(label.as_str()) {
                    return Err(InventoryError::DuplicateLabel {
                        list,
                        label: label.clone(),
                    });
                }
            }
        }
        if self.polarity_labels != POLARITY_LABELS {
            return Err(InventoryError::PolarityLabels);
        }
        Ok(())
    }

    pub fn verb_types(&self) -> &[String] {
        &self.verb_types
    }

    pub fn adverb_classes(&self) -> &[String] {
        &self.adverb_classes
    }

    pub fn adjective_types(&self) -> &[String] {
        &self.adjective_types
    }

    pub fn polarity_labels(&self) -> &[String] {
        &self.polarity_labels
    }

    /// Sense labels for a part of speech, without the `Uncertain` abstention.
    pub fn sense_labels(&self, pos: PartOfSpeech) -> &[String] {
        match pos {
            PartOfSpeech::Verb => &self.verb_types,
            PartOfSpeech::Adverb => &self.adverb_classes,
            PartOfSpeech::Adjective => &self.adjective_types,
        }
    }

    /// Every label an annotator may pick as primary tag for this task.
    pub fn allowed_primary(&self, kind: AnnotationKind, pos: PartOfSpeech) -> Vec<String> {
        match kind {
            AnnotationKind::Sense => {
                let mut labels = self.sense_labels(pos).to_vec();
                labels.push(UNCERTAIN.to_string());
                labels
            }
            AnnotationKind::Polarity => self.polarity_labels.clone(),
        }
    }

    /// Secondary tag options; only verb sense tasks take a secondary tag.
    pub fn allowed_secondary(&self, kind: AnnotationKind, pos: PartOfSpeech) -> Option<Vec<String>> {
        match (kind, pos) {
            (AnnotationKind::Sense, PartOfSpeech::Verb) => Some(self.allowed_primary(kind, pos)),
            _ => None,
        }
    }

    pub fn verb_index(&self, tag: &str) -> Option<usize> {
        self.verb_types.iter().position(|t| t == tag)
    }

    pub fn adverb_index(&self, tag: &str) -> Option<usize> {
        self.adverb_classes.iter().position(|t| t == tag)
    }
}
