//! The annotation workflow on top of the store.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use sensecrowd_core::lexicon_file::LexiconRecord;
use sensecrowd_core::{
    validate_annotation, Annotation, AnnotationKind, Annotator, AnnotatorId, EntryStatus,
    LexiconEntry, PartOfSpeech, ResolvedTags, SenseInventory, WordId,
};
use serde::{Deserialize, Serialize};

use crate::auth;
use crate::config::ServiceConfig;
use crate::error::{ServiceError, StartupError};
use crate::quiz::{scaled_score, PublicQuestion, QuizBank};
use crate::store::{
    Account, CredentialRequest, Event, OpenReport, RequestState, Session, State, Store,
    SubmissionState, WordSubmission,
};

pub const OUTBOX: &str = "outbox.jsonl";
const DEFAULT_GUIDELINES: &str = include_str!("../assets/guidelines.md");

pub type Clock = Arc<dyn Fn() -> i64 + Send + Sync>;

fn system_clock() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs() as i64)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CredentialForm {
    pub name: String,
    pub email: String,
    pub profession: String,
    pub education: String,
    pub quiz_answers: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoginResult {
    pub token: String,
    pub account_id: AnnotatorId,
    pub admin: bool,
    pub expires_at: i64,
}

/// One line of the outbox file: the email that would have been sent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutboxMessage {
    pub to: String,
    pub subject: String,
    pub body: String,
    pub password: String,
    pub sent_at: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Approval {
    pub request_id: String,
    pub annotator_id: AnnotatorId,
    pub email: String,
    pub score: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub word_id: WordId,
    pub surface: String,
    pub pos: PartOfSpeech,
    pub gloss: String,
    pub example: String,
    pub kind: AnnotationKind,
    pub allowed_primary: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_secondary: Option<Vec<String>>,
    pub status: EntryStatus,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationInput {
    pub word_id: WordId,
    pub kind: AnnotationKind,
    pub primary_tag: String,
    #[serde(default)]
    pub secondary_tag: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationAck {
    pub word_id: WordId,
    pub kind: AnnotationKind,
    /// True when this replaced the annotator's earlier annotation.
    pub replaced: bool,
    pub annotation_count: usize,
    pub resolved: Option<ResolvedTags>,
    pub status: EntryStatus,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordForm {
    pub surface: String,
    pub gloss: String,
    pub example: String,
    #[serde(default)]
    pub pos: Option<PartOfSpeech>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewDecision {
    pub accept: bool,
    /// Required on accept when the submitter gave none.
    #[serde(default)]
    pub pos: Option<PartOfSpeech>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportFilter {
    pub pos: Option<PartOfSpeech>,
    pub kind: Option<AnnotationKind>,
    pub status: Option<EntryStatus>,
}

/// Who is calling, resolved from a bearer token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Caller {
    pub account_id: AnnotatorId,
    pub admin: bool,
}

pub struct Service {
    store: Store,
    inventory: SenseInventory,
    quiz: QuizBank,
    guidelines: String,
    outbox: PathBuf,
    session_ttl: i64,
    clock: Clock,
}

fn require(value: &str, field: &'static str) -> Result<String, ServiceError> {
    let v = value.trim();
    if v.is_empty() {
        Err(ServiceError::EmptyField(field))
    } else {
        Ok(v.to_string())
    }
}

fn normalize_email(email: &str) -> String {
    email.trim().to_lowercase()
}

impl Service {
    pub fn open(config: &ServiceConfig) -> Result<(Service, OpenReport), StartupError> {
        Self::open_with_clock(config, Arc::new(system_clock))
    }

    pub fn open_with_clock(
        config: &ServiceConfig,
        clock: Clock,
    ) -> Result<(Service, OpenReport), StartupError> {
        config.validate()?;
        let inventory = match &config.inventory {
            Some(p) => SenseInventory::load(p)?,
            None => SenseInventory::default(),
        };
        let quiz = match &config.quiz_bank {
            Some(p) => QuizBank::load(p)?,
            None => QuizBank::default(),
        };
        let guidelines = match &config.guidelines {
            Some(p) => std::fs::read_to_string(p).map_err(|source| StartupError::Io {
                path: p.clone(),
                source,
            })?,
            None => DEFAULT_GUIDELINES.to_string(),
        };
        let (store, report) = Store::open(&config.data_dir, config.uncertainty)?;
        let service = Service {
            store,
            inventory,
            quiz,
            guidelines,
            outbox: config.data_dir.join(OUTBOX),
            session_ttl: config.session_ttl_secs as i64,
            clock,
        };
        if let (Some(email), Some(password)) = (&config.admin_email, &config.admin_password) {
            service.ensure_admin(email, password)?;
        }
        Ok((service, report))
    }

    fn now(&self) -> i64 {
        (self.clock)()
    }

    pub fn inventory(&self) -> &SenseInventory {
        &self.inventory
    }

    pub fn outbox_path(&self) -> &Path {
        &self.outbox
    }

    pub fn read<T>(&self, f: impl FnOnce(&State) -> T) -> T {
        self.store.read(f)
    }

    /// Creates the admin account unless an account with that email exists.
    /// Returns whether one was created.
    pub fn ensure_admin(&self, email: &str, password: &str) -> Result<bool, ServiceError> {
        let email = normalize_email(email);
        require(&email, "admin_email")?;
        require(password, "admin_password")?;
        if self.read(|s| s.account_by_email(&email).is_some()) {
            return Ok(false);
        }
        let salt = auth::new_salt();
        let hash = auth::hash_password(&salt, password);
        self.store.write(
            self.now(),
            |s| {
                if s.account_by_email(&email).is_some() {
                    return Err(ServiceError::DuplicateEmail(email.clone()));
                }
                let account = Account {
                    account_id: AnnotatorId(format!("admin{:02}", s.accounts.len() + 1)),
                    email: email.clone(),
                    password_salt: salt,
                    password_hash: hash,
                    admin: true,
                };
                Ok((Event::AdminCreated { account }, ()))
            },
            |_, _| true,
        )
    }

    pub fn quiz(&self) -> Vec<PublicQuestion> {
        self.quiz.public()
    }

    pub fn guidelines(&self) -> &str {
        &self.guidelines
    }

    pub fn request_credentials(&self, form: CredentialForm) -> Result<CredentialRequest, ServiceError> {
        let name = require(&form.name, "name")?;
        let email = normalize_email(&form.email);
        require(&email, "email")?;
        let profession = require(&form.profession, "profession")?;
        let education = require(&form.education, "education")?;
        if form.quiz_answers.len() != self.quiz.len() {
            return Err(ServiceError::IncompleteQuiz {
                expected: self.quiz.len(),
                found: form.quiz_answers.len(),
            });
        }
        for (i, (q, &a)) in self.quiz.questions.iter().zip(&form.quiz_answers).enumerate() {
            if a >= q.options.len() {
                return Err(ServiceError::InvalidAnswer {
                    question: i + 1,
                    choice: a,
                    options: q.options.len(),
                });
            }
        }
        let score = scaled_score(self.quiz.correct(&form.quiz_answers), self.quiz.len());
        let now = self.now();
        self.store.write(
            now,
            |s| {
                let taken = s.account_by_email(&email).is_some()
                    || s.requests
                        .values()
                        .any(|r| r.email == email && r.state == RequestState::Pending);
                if taken {
                    return Err(ServiceError::DuplicateEmail(email.clone()));
                }
                let id = s.next_request_id();
                let event = Event::CredentialRequested {
                    request: CredentialRequest {
                        request_id: id.clone(),
                        name,
                        email: email.clone(),
                        profession,
                        education,
                        quiz_answers: form.quiz_answers.clone(),
                        computed_score: score,
                        state: RequestState::Pending,
                        created_at: now,
                    },
                };
                Ok((event, id))
            },
            |s, id| s.requests[&id].clone(),
        )
    }

    /// Resolves a bearer token. Unknown and expired tokens are rejected alike.
    pub fn authenticate(&self, token: Option<&str>) -> Result<Caller, ServiceError> {
        let token = token.ok_or(ServiceError::Unauthorized("missing bearer token"))?;
        let hash = auth::hash_token(token);
        let now = self.now();
        self.read(|s| {
            let session = s
                .sessions
                .get(&hash)
                .filter(|sess| sess.expires_at > now)
                .ok_or(ServiceError::Unauthorized("invalid or expired session"))?;
            let account = s
                .accounts
                .get(&session.account_id)
                .ok_or(ServiceError::Unauthorized("invalid or expired session"))?;
            Ok(Caller {
                account_id: account.account_id.clone(),
                admin: account.admin,
            })
        })
    }

    fn require_admin(caller: &Caller) -> Result<(), ServiceError> {
        if caller.admin {
            Ok(())
        } else {
            Err(ServiceError::Forbidden)
        }
    }

    fn require_annotator(&self, caller: &Caller) -> Result<(), ServiceError> {
        if self.read(|s| s.annotators.contains_key(&caller.account_id)) {
            Ok(())
        } else {
            Err(ServiceError::Forbidden)
        }
    }

    pub fn list_requests(&self, caller: &Caller) -> Result<Vec<CredentialRequest>, ServiceError> {
        Self::require_admin(caller)?;
        Ok(self.read(|s| s.requests.values().cloned().collect()))
    }

    /// Creates the annotator and writes the generated password to the outbox.
    pub fn approve_request(&self, caller: &Caller, request_id: &str) -> Result<Approval, ServiceError> {
        Self::require_admin(caller)?;
        let password = auth::new_password();
        let salt = auth::new_salt();
        let hash = auth::hash_password(&salt, &password);
        let now = self.now();
        self.store.write(
            now,
            |s| {
                let request = s
                    .requests
                    .get(request_id)
                    .ok_or_else(|| ServiceError::UnknownRequest(request_id.to_string()))?;
                if request.state != RequestState::Pending {
                    return Err(ServiceError::NotPending(request_id.to_string()));
                }
                let id = s.next_annotator_id();
                // The outbox goes first: a crash after it leaves the request
                // pending and approvable again, never an account without a
                // delivered password.
                self.send(&OutboxMessage {
                    to: request.email.clone(),
                    subject: "Your annotation account".into(),
                    body: format!(
                        "Hello {},\n\nyour request was approved. Log in with {} and the password below.",
                        request.name, request.email
                    ),
                    password: password.clone(),
                    sent_at: now,
                })
                .map_err(ServiceError::Outbox)?;
                let event = Event::RequestApproved {
                    request_id: request_id.to_string(),
                    annotator: Annotator {
                        annotator_id: id.clone(),
                        name: request.name.clone(),
                        email: request.email.clone(),
                        profession: request.profession.clone(),
                        education: request.education.clone(),
                        score: request.computed_score,
                        registered_at: now,
                    },
                    account: Account {
                        account_id: id.clone(),
                        email: request.email.clone(),
                        password_salt: salt,
                        password_hash: hash,
                        admin: false,
                    },
                };
                Ok((event, id))
            },
            |s, id| {
                let annotator = &s.annotators[&id];
                Approval {
                    request_id: request_id.to_string(),
                    annotator_id: annotator.annotator_id.clone(),
                    email: annotator.email.clone(),
                    score: annotator.score,
                }
            },
        )
    }

    pub fn reject_request(&self, caller: &Caller, request_id: &str) -> Result<CredentialRequest, ServiceError> {
        Self::require_admin(caller)?;
        self.store.write(
            self.now(),
            |s| {
                let request = s
                    .requests
                    .get(request_id)
                    .ok_or_else(|| ServiceError::UnknownRequest(request_id.to_string()))?;
                if request.state != RequestState::Pending {
                    return Err(ServiceError::NotPending(request_id.to_string()));
                }
                let event = Event::RequestRejected {
                    request_id: request_id.to_string(),
                };
                Ok((event, ()))
            },
            |s, _| s.requests[request_id].clone(),
        )
    }

    fn send(&self, message: &OutboxMessage) -> std::io::Result<()> {
        let mut line = serde_json::to_vec(message).expect("message serializes");
        line.push(b'\n');
        let mut f = OpenOptions::new().create(true).append(true).open(&self.outbox)?;
        f.write_all(&line)?;
        f.sync_data()
    }

    pub fn login(&self, email: &str, password: &str) -> Result<LoginResult, ServiceError> {
        let email = normalize_email(email);
        let account = self
            .read(|s| s.account_by_email(&email).cloned())
            .ok_or(ServiceError::BadCredentials)?;
        if !auth::verify_password(&account.password_salt, &account.password_hash, password) {
            return Err(ServiceError::BadCredentials);
        }
        let token = auth::new_token();
        let now = self.now();
        let session = Session {
            token_hash: auth::hash_token(&token),
            account_id: account.account_id.clone(),
            expires_at: now + self.session_ttl,
        };
        let expires_at = session.expires_at;
        self.store.write(
            now,
            |_| Ok::<_, ServiceError>((Event::SessionStarted { session }, ())),
            |_, _| (),
        )?;
        Ok(LoginResult {
            token,
            account_id: account.account_id,
            admin: account.admin,
            expires_at,
        })
    }

    fn task_for(&self, entry: &LexiconEntry, kind: AnnotationKind) -> AnnotationTask {
        AnnotationTask {
            word_id: entry.word_id.clone(),
            surface: entry.surface.clone(),
            pos: entry.pos,
            gloss: entry.gloss.clone(),
            example: entry.example.clone(),
            kind,
            allowed_primary: self.inventory.allowed_primary(kind, entry.pos),
            allowed_secondary: self.inventory.allowed_secondary(kind, entry.pos),
            status: entry.status,
        }
    }

    /// The open word with the fewest annotations of `kind` that this caller
    /// has not annotated yet; ties go to the smaller word id.
    pub fn next_task(
        &self,
        caller: &Caller,
        kind: AnnotationKind,
        pos: Option<PartOfSpeech>,
    ) -> Result<AnnotationTask, ServiceError> {
        self.require_annotator(caller)?;
        self.read(|s| {
            s.entries
                .values()
                .filter(|e| is_open(e.status))
                .filter(|e| pos.is_none_or(|p| e.pos == p))
                .filter(|e| !e.has_annotation_from(&caller.account_id, kind))
                .min_by(|a, b| {
                    a.annotation_count(kind)
                        .cmp(&b.annotation_count(kind))
                        .then_with(|| a.word_id.cmp(&b.word_id))
                })
                .map(|e| self.task_for(e, kind))
                .ok_or(ServiceError::NoTasksLeft(kind.as_str()))
        })
    }

    /// Stores the annotation and re-adjudicates the word in the same write.
    pub fn submit_annotation(
        &self,
        caller: &Caller,
        input: AnnotationInput,
    ) -> Result<AnnotationAck, ServiceError> {
        self.require_annotator(caller)?;
        let now = self.now();
        let annotation = Annotation {
            annotator_id: caller.account_id.clone(),
            kind: input.kind,
            primary_tag: input.primary_tag.trim().to_string(),
            secondary_tag: input.secondary_tag.map(|t| t.trim().to_string()),
            timestamp: now,
        };
        let word_id = input.word_id;
        self.store.write(
            now,
            |s| {
                let entry = s
                    .entries
                    .get(&word_id)
                    .ok_or_else(|| ServiceError::UnknownWord(word_id.clone()))?;
                if !is_open(entry.status) {
                    return Err(ServiceError::WordClosed(word_id.clone()));
                }
                validate_annotation(&annotation, entry, &self.inventory)?;
                let replaced = entry.has_annotation_from(&caller.account_id, annotation.kind);
                let event = Event::AnnotationSubmitted {
                    word_id: word_id.clone(),
                    annotation: annotation.clone(),
                };
                Ok((event, replaced))
            },
            |s, replaced| {
                let entry = &s.entries[&word_id];
                AnnotationAck {
                    word_id: word_id.clone(),
                    kind: annotation.kind,
                    replaced,
                    annotation_count: entry.annotation_count(annotation.kind),
                    resolved: entry.resolved(annotation.kind).cloned(),
                    status: entry.status,
                }
            },
        )
    }

    pub fn add_word(&self, caller: &Caller, form: WordForm) -> Result<WordSubmission, ServiceError> {
        let surface = require(&form.surface, "surface")?;
        let gloss = require(&form.gloss, "gloss")?;
        let example = require(&form.example, "example")?;
        let now = self.now();
        self.store.write(
            now,
            |s| {
                let id = s.next_submission_id();
                let event = Event::WordSubmitted {
                    submission: WordSubmission {
                        submission_id: id.clone(),
                        surface,
                        gloss,
                        example,
                        pos: form.pos,
                        submitter_id: caller.account_id.clone(),
                        state: SubmissionState::Queued,
                        created_at: now,
                        word_id: None,
                    },
                };
                Ok((event, id))
            },
            |s, id| s.submissions[&id].clone(),
        )
    }

    pub fn list_submissions(&self, caller: &Caller) -> Result<Vec<WordSubmission>, ServiceError> {
        Self::require_admin(caller)?;
        Ok(self.read(|s| s.submissions.values().cloned().collect()))
    }

    /// Accepting creates an active entry; rejecting only records the state.
    pub fn review_submission(
        &self,
        caller: &Caller,
        submission_id: &str,
        decision: ReviewDecision,
    ) -> Result<WordSubmission, ServiceError> {
        Self::require_admin(caller)?;
        self.store.write(
            self.now(),
            |s| {
                let sub = s
                    .submissions
                    .get(submission_id)
                    .ok_or_else(|| ServiceError::UnknownSubmission(submission_id.to_string()))?;
                if sub.state != SubmissionState::Queued {
                    return Err(ServiceError::AlreadyReviewed(submission_id.to_string()));
                }
                let entry = if decision.accept {
                    let pos = decision.pos.or(sub.pos).ok_or(ServiceError::EmptyField("pos"))?;
                    Some(LexiconEntry::new(
                        s.next_word_id(),
                        sub.surface.clone(),
                        pos,
                        sub.gloss.clone(),
                        sub.example.clone(),
                    ))
                } else {
                    None
                };
                let event = Event::SubmissionReviewed {
                    submission_id: submission_id.to_string(),
                    entry,
                };
                Ok((event, ()))
            },
            |s, _| s.submissions[submission_id].clone(),
        )
    }

    /// Admin override of an entry's status, e.g. removing a word that keeps
    /// getting flagged as uncertain.
    pub fn set_status(
        &self,
        caller: &Caller,
        word_id: &WordId,
        status: EntryStatus,
    ) -> Result<LexiconRecord, ServiceError> {
        Self::require_admin(caller)?;
        self.store.write(
            self.now(),
            |s| {
                if !s.entries.contains_key(word_id) {
                    return Err(ServiceError::UnknownWord(word_id.clone()));
                }
                let event = Event::StatusChanged {
                    word_id: word_id.clone(),
                    status,
                };
                Ok((event, ()))
            },
            |s, _| LexiconRecord::from_entry(&s.entries[word_id], AnnotationKind::Sense),
        )
    }

    /// Adds entries from an interchange file. Fails on the first id that is
    /// already present; earlier records stay imported.
    pub fn import(&self, records: Vec<LexiconRecord>) -> Result<usize, ServiceError> {
        let mut n = 0;
        for record in records {
            let entry = record.into_entry();
            self.store.write(
                self.now(),
                |s| {
                    if s.entries.contains_key(&entry.word_id) {
                        return Err(ServiceError::DuplicateWord(entry.word_id.clone()));
                    }
                    let event = Event::WordImported {
                        entry: entry.clone(),
                    };
                    Ok((event, ()))
                },
                |_, _| (),
            )?;
            n += 1;
        }
        Ok(n)
    }

    /// One record per matching entry, ordered by word id. `kind` defaults to
    /// sense.
    pub fn export(&self, filter: ExportFilter) -> Vec<LexiconRecord> {
        let kind = filter.kind.unwrap_or(AnnotationKind::Sense);
        self.read(|s| {
            s.entries
                .values()
                .filter(|e| filter.pos.is_none_or(|p| e.pos == p))
                .filter(|e| filter.status.is_none_or(|st| e.status == st))
                .map(|e| LexiconRecord::from_entry(e, kind))
                .collect()
        })
    }
}

/// Words that can be served and annotated.
fn is_open(status: EntryStatus) -> bool {
    matches!(status, EntryStatus::Active | EntryStatus::FlaggedUncertain)
}
