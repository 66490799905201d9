//! Append-only JSON-lines event log with the state rebuilt from it.
//!
//! Every write is one event, one line, flushed and synced before the caller
//! gets an answer. On open the log is replayed; a torn last line (no trailing
//! newline) is cut off, anything else unparsable is an error.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use sensecrowd_core::{
    resolve, Annotation, AnnotationKind, Annotator, AnnotatorId, EntryStatus, LexiconEntry,
    PartOfSpeech, UncertaintyPolicy, WordId,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const EVENT_LOG: &str = "events.jsonl";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestState {
    Pending,
    Approved,
    Rejected,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CredentialRequest {
    pub request_id: String,
    pub name: String,
    pub email: String,
    pub profession: String,
    pub education: String,
    pub quiz_answers: Vec<usize>,
    pub computed_score: u8,
    pub state: RequestState,
    pub created_at: i64,
}

/// Login record. Admin accounts have no annotator profile.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub account_id: AnnotatorId,
    pub email: String,
    pub password_salt: String,
    pub password_hash: String,
    pub admin: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    /// SHA-256 of the bearer token; the token itself is never stored.
    pub token_hash: String,
    pub account_id: AnnotatorId,
    pub expires_at: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubmissionState {
    Queued,
    Accepted,
    Rejected,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordSubmission {
    pub submission_id: String,
    pub surface: String,
    pub gloss: String,
    pub example: String,
    pub pos: Option<PartOfSpeech>,
    pub submitter_id: AnnotatorId,
    pub state: SubmissionState,
    pub created_at: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word_id: Option<WordId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    AdminCreated {
        account: Account,
    },
    CredentialRequested {
        request: CredentialRequest,
    },
    RequestApproved {
        request_id: String,
        annotator: Annotator,
        account: Account,
    },
    RequestRejected {
        request_id: String,
    },
    SessionStarted {
        session: Session,
    },
    AnnotationSubmitted {
        word_id: WordId,
        annotation: Annotation,
    },
    WordSubmitted {
        submission: WordSubmission,
    },
    SubmissionReviewed {
        submission_id: String,
        /// The new entry when accepted.
        entry: Option<LexiconEntry>,
    },
    WordImported {
        entry: LexiconEntry,
    },
    StatusChanged {
        word_id: WordId,
        status: EntryStatus,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct LogLine {
    seq: u64,
    at: i64,
    #[serde(flatten)]
    event: Event,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path} line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("event does not fit the current state: {0}")]
    Inconsistent(String),
}

/// Everything the service knows, rebuilt from the log.
#[derive(Clone, Debug, Default)]
pub struct State {
    pub requests: BTreeMap<String, CredentialRequest>,
    pub accounts: BTreeMap<AnnotatorId, Account>,
    pub annotators: HashMap<AnnotatorId, Annotator>,
    pub sessions: HashMap<String, Session>,
    pub entries: BTreeMap<WordId, LexiconEntry>,
    pub submissions: BTreeMap<String, WordSubmission>,
    policy: UncertaintyPolicy,
}

fn inconsistent(message: impl Into<String>) -> StoreError {
    StoreError::Inconsistent(message.into())
}

impl State {
    pub fn new(policy: UncertaintyPolicy) -> Self {
        State {
            policy,
            ..State::default()
        }
    }

    pub fn policy(&self) -> UncertaintyPolicy {
        self.policy
    }

    pub fn account_by_email(&self, email: &str) -> Option<&Account> {
        self.accounts.values().find(|a| a.email == email)
    }

    /// `w000001`, `w000002`, ... skipping ids already taken (imports may
    /// bring their own).
    pub fn next_word_id(&self) -> WordId {
        let mut n = self.entries.len() + 1;
        loop {
            let id = WordId(format!("w{n:06}"));
            if !self.entries.contains_key(&id) {
                return id;
            }
            n += 1;
        }
    }

    pub fn next_request_id(&self) -> String {
        format!("r{:06}", self.requests.len() + 1)
    }

    pub fn next_submission_id(&self) -> String {
        format!("s{:06}", self.submissions.len() + 1)
    }

    pub fn next_annotator_id(&self) -> AnnotatorId {
        AnnotatorId(format!("a{:06}", self.accounts.len() + 1))
    }

    /// Re-adjudicates one kind of one entry from its stored annotations.
    fn refresh_resolution(&mut self, word_id: &WordId, kind: AnnotationKind) -> Result<(), StoreError> {
        let entry = self
            .entries
            .get_mut(word_id)
            .ok_or_else(|| inconsistent(format!("unknown word {word_id}")))?;
        let annotations: Vec<Annotation> = entry.annotations_of(kind).cloned().collect();
        if annotations.is_empty() {
            entry.resolved.remove(&kind);
            return Ok(());
        }
        let resolved = resolve(&annotations, &self.annotators).map_err(|e| inconsistent(e.to_string()))?;
        entry.resolved.insert(kind, resolved);
        if kind == AnnotationKind::Sense {
            self.policy.apply(entry);
        }
        Ok(())
    }

    pub fn apply(&mut self, event: &Event) -> Result<(), StoreError> {
        match event {
            Event::AdminCreated { account } => {
                if self.accounts.contains_key(&account.account_id) {
                    return Err(inconsistent(format!("account {} exists", account.account_id)));
                }
                self.accounts.insert(account.account_id.clone(), account.clone());
            }
            Event::CredentialRequested { request } => {
                self.requests.insert(request.request_id.clone(), request.clone());
            }
            Event::RequestApproved {
                request_id,
                annotator,
                account,
            } => {
                let request = self
                    .requests
                    .get_mut(request_id)
                    .filter(|r| r.state == RequestState::Pending)
                    .ok_or_else(|| inconsistent(format!("request {request_id} is not pending")))?;
                request.state = RequestState::Approved;
                self.annotators.insert(annotator.annotator_id.clone(), annotator.clone());
                self.accounts.insert(account.account_id.clone(), account.clone());
            }
            Event::RequestRejected { request_id } => {
                let request = self
                    .requests
                    .get_mut(request_id)
                    .filter(|r| r.state == RequestState::Pending)
                    .ok_or_else(|| inconsistent(format!("request {request_id} is not pending")))?;
                request.state = RequestState::Rejected;
            }
            Event::SessionStarted { session } => {
                self.sessions.insert(session.token_hash.clone(), session.clone());
            }
            Event::AnnotationSubmitted {
                word_id,
                annotation,
            } => {
                if !self.annotators.contains_key(&annotation.annotator_id) {
                    return Err(inconsistent(format!("unknown annotator {}", annotation.annotator_id)));
                }
                let entry = self
                    .entries
                    .get_mut(word_id)
                    .ok_or_else(|| inconsistent(format!("unknown word {word_id}")))?;
                entry.upsert_annotation(annotation.clone());
                self.refresh_resolution(word_id, annotation.kind)?;
            }
            Event::WordSubmitted { submission } => {
                self.submissions
                    .insert(submission.submission_id.clone(), submission.clone());
            }
            Event::SubmissionReviewed {
                submission_id,
                entry,
            } => {
                if let Some(e) = entry.as_ref().filter(|e| self.entries.contains_key(&e.word_id)) {
                    return Err(inconsistent(format!("word {} exists", e.word_id)));
                }
                let sub = self
                    .submissions
                    .get_mut(submission_id)
                    .filter(|s| s.state == SubmissionState::Queued)
                    .ok_or_else(|| inconsistent(format!("submission {submission_id} is not queued")))?;
                match entry {
                    Some(e) => {
                        sub.state = SubmissionState::Accepted;
                        sub.word_id = Some(e.word_id.clone());
                        self.entries.insert(e.word_id.clone(), e.clone());
                    }
                    None => sub.state = SubmissionState::Rejected,
                }
            }
            Event::WordImported { entry } => {
                if self.entries.contains_key(&entry.word_id) {
                    return Err(inconsistent(format!("word {} exists", entry.word_id)));
                }
                self.entries.insert(entry.word_id.clone(), entry.clone());
            }
            Event::StatusChanged { word_id, status } => {
                let entry = self
                    .entries
                    .get_mut(word_id)
                    .ok_or_else(|| inconsistent(format!("unknown word {word_id}")))?;
                entry.status = *status;
            }
        }
        Ok(())
    }
}

/// What `Store::open` found on disk.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpenReport {
    pub events: usize,
    /// Bytes of a torn final line that were cut off.
    pub truncated_bytes: usize,
}

struct Inner {
    state: State,
    file: File,
    len: u64,
    next_seq: u64,
}

/// The event log and the state it produces, behind one lock. Writers are
/// fully serialized, which also serializes all writes to any single word;
/// readers share the lock.
pub struct Store {
    path: PathBuf,
    inner: RwLock<Inner>,
}

impl Store {
    pub fn open(dir: impl AsRef<Path>, policy: UncertaintyPolicy) -> Result<(Store, OpenReport), StoreError> {
        let dir = dir.as_ref();
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| StoreError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let path = dir.join(EVENT_LOG);
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)
            .map_err(io(&path))?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(io(&path))?;

        let mut report = OpenReport::default();
        let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        if complete < bytes.len() {
            report.truncated_bytes = bytes.len() - complete;
            log::warn!(
                "{}: dropping {} bytes of an unfinished last line",
                path.display(),
                report.truncated_bytes
            );
            file.set_len(complete as u64).map_err(io(&path))?;
            file.sync_data().map_err(io(&path))?;
        }

        let mut state = State::new(policy);
        let mut next_seq = 1;
        for (i, line) in bytes[..complete].split(|&b| b == b'\n').enumerate() {
            if line.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            let corrupt = |message: String| StoreError::Corrupt {
                path: path.clone(),
                line: i + 1,
                message,
            };
            let record: LogLine = serde_json::from_slice(line).map_err(|e| corrupt(e.to_string()))?;
            state.apply(&record.event).map_err(|e| corrupt(e.to_string()))?;
            next_seq = record.seq + 1;
            report.events += 1;
        }
        let store = Store {
            path,
            inner: RwLock::new(Inner {
                state,
                file,
                len: complete as u64,
                next_seq,
            }),
        };
        Ok((store, report))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn read<T>(&self, f: impl FnOnce(&State) -> T) -> T {
        let inner = self.inner.read().unwrap_or_else(|e| e.into_inner());
        f(&inner.state)
    }

    /// Runs `decide` against the current state; if it yields an event, the
    /// event is logged durably and applied, then `report` reads the new state
    /// along with whatever `decide` passed on. Nothing else can write in
    /// between.
    pub fn write<K, T, E: From<StoreError>>(
        &self,
        at: i64,
        decide: impl FnOnce(&State) -> Result<(Event, K), E>,
        report: impl FnOnce(&State, K) -> T,
    ) -> Result<T, E> {
        let mut guard = self.inner.write().unwrap_or_else(|e| e.into_inner());
        let inner = &mut *guard;
        let (event, key) = decide(&inner.state)?;
        let line = LogLine {
            seq: inner.next_seq,
            at,
            event,
        };
        let mut buf = serde_json::to_vec(&line).expect("events serialize");
        buf.push(b'\n');
        let written = inner
            .file
            .write_all(&buf)
            .and_then(|_| inner.file.sync_data());
        if let Err(source) = written {
            // Leave no partial line behind for the next append to extend.
            let _ = inner.file.set_len(inner.len);
            return Err(StoreError::Io {
                path: self.path.clone(),
                source,
            }
            .into());
        }
        // `apply` checks before it mutates, so a rejected event leaves the
        // state as it was; take it back out of the log too.
        if let Err(e) = inner.state.apply(&line.event) {
            let _ = inner.file.set_len(inner.len).and_then(|_| inner.file.sync_data());
            return Err(e.into());
        }
        inner.len += buf.len() as u64;
        inner.next_seq += 1;
        Ok(report(&inner.state, key))
    }
}
