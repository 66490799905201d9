//! Core library for a crowd-sourced sense and polarity lexicon.
//!
//! The crate is split along the lines of the workflow it supports:
//!
//! * [`inventory`] and [`lexicon`] hold the closed tag sets, lexicon entries,
//!   annotation validation and score-based adjudication.
//! * [`lexicon_file`] reads and writes the JSON-lines lexicon interchange format.
//! * [`corpus`] ingests POS-tagged text, extracts adverb/verb bigrams and builds
//!   the adverb sense-class by verb sense-type distribution matrix.
//! * [`features`] and [`skipgram`] turn reviews into feature vectors.
//! * [`learners`] contains the classifiers, metrics and the experiment harness.

pub mod corpus;
pub mod features;
pub mod inventory;
pub mod learners;
pub mod lexicon;
pub mod lexicon_file;
pub mod skipgram;

pub use inventory::{SenseInventory, UNCERTAIN};
pub use lexicon::{
    resolve, uncertainty_flag, validate_annotation, Annotation, AnnotationKind, Annotator,
    AnnotatorId, EntryStatus, LexiconEntry, PartOfSpeech, Resolution, ResolvedTags, SenseLexicon,
    UncertaintyPolicy, WordId,
};
