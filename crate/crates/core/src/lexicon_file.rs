//! JSON-lines lexicon interchange format.
//!
//! One object per line:
//! `{"word_id","surface","pos","gloss","example","resolved":{"kind","primary","secondary"?},"status"}`.
//! `resolved` is `null` when the entry has no winning tag of the exported kind.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{
    AnnotationKind, EntryStatus, LexiconEntry, PartOfSpeech, Resolution, ResolvedTags,
    SenseLexicon, WordId,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedRecord {
    pub kind: AnnotationKind,
    pub primary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconRecord {
    pub word_id: WordId,
    pub surface: String,
    pub pos: PartOfSpeech,
    pub gloss: String,
    pub example: String,
    pub resolved: Option<ResolvedRecord>,
    pub status: EntryStatus,
}

#[derive(Debug, Error)]
pub enum LexiconFileError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LexiconRecord {
    /// Projects an entry onto the record for one annotation kind.
    pub fn from_entry(entry: &LexiconEntry, kind: AnnotationKind) -> Self {
        let resolved = entry.resolved(kind).and_then(|r| {
            r.primary_tag.as_ref().map(|primary| ResolvedRecord {
                kind,
                primary: primary.clone(),
                secondary: r.secondary_tag.clone(),
            })
        });
        LexiconRecord {
            word_id: entry.word_id.clone(),
            surface: entry.surface.clone(),
            pos: entry.pos,
            gloss: entry.gloss.clone(),
            example: entry.example.clone(),
            resolved,
            status: entry.status,
        }
    }

    /// Builds an entry without annotations. An imported tag is treated as
    /// settled and marked unanimous.
    pub fn into_entry(self) -> LexiconEntry {
        let mut entry = LexiconEntry::new(self.word_id, self.surface, self.pos, self.gloss, self.example);
        entry.status = self.status;
        if let Some(r) = self.resolved {
            entry.resolved.insert(
                r.kind,
                ResolvedTags {
                    primary_tag: Some(r.primary),
                    secondary_tag: r.secondary,
                    resolution: Resolution::Unanimous,
                },
            );
        }
        entry
    }
}

pub fn read_records(reader: impl BufRead) -> Result<Vec<LexiconRecord>, LexiconFileError> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|source| LexiconFileError::Json {
            line: i + 1,
            source,
        })?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_records<'a>(
    mut writer: impl Write,
    records: impl IntoIterator<Item = &'a LexiconRecord>,
) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

/// Collects the decisive sense tags of non-removed records.
pub fn sense_lexicon(records: &[LexiconRecord]) -> SenseLexicon {
    let mut lex = SenseLexicon::new();
    for r in records {
        if r.status == EntryStatus::Removed {
            continue;
        }
        if let Some(res) = r.resolved.as_ref().filter(|res| res.kind == AnnotationKind::Sense) {
            lex.insert(r.pos, r.surface.clone(), res.primary.clone());
        }
    }
    lex
}
