use std::path::PathBuf;

use sensecrowd_core::inventory::InventoryError;
use sensecrowd_core::lexicon::ValidationError;
use sensecrowd_core::WordId;
use thiserror::Error;

use crate::config::ConfigError;
use crate::quiz::QuizError;
use crate::store::StoreError;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("email `{0}` is already registered or requested")]
    DuplicateEmail(String),
    #[error("the quiz has {expected} questions but {found} answers were given")]
    IncompleteQuiz { expected: usize, found: usize },
    #[error("answer {question} picks option {choice}, but that question has {options} options")]
    InvalidAnswer {
        question: usize,
        choice: usize,
        options: usize,
    },
    #[error("request `{0}` is not pending")]
    NotPending(String),
    #[error("{0}")]
    Unauthorized(&'static str),
    #[error("this session may not perform this action")]
    Forbidden,
    #[error("wrong email or password")]
    BadCredentials,
    #[error("no {0} tasks left for this annotator")]
    NoTasksLeft(&'static str),
    #[error("unknown word `{0}`")]
    UnknownWord(WordId),
    #[error("word `{0}` is not open for annotation")]
    WordClosed(WordId),
    #[error("word id `{0}` already exists")]
    DuplicateWord(WordId),
    #[error("unknown credential request `{0}`")]
    UnknownRequest(String),
    #[error("unknown submission `{0}`")]
    UnknownSubmission(String),
    #[error("submission `{0}` was already reviewed")]
    AlreadyReviewed(String),
    #[error("field `{0}` must not be empty")]
    EmptyField(&'static str),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("{0}")]
    BadRequest(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("outbox: {0}")]
    Outbox(std::io::Error),
}

impl ServiceError {
    /// Stable machine-readable code for the JSON error body.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::DuplicateEmail(_) => "duplicate_email",
            ServiceError::IncompleteQuiz { .. } => "incomplete_quiz",
            ServiceError::InvalidAnswer { .. } => "invalid_answer",
            ServiceError::NotPending(_) => "not_pending",
            ServiceError::Unauthorized(_) => "unauthorized",
            ServiceError::Forbidden => "unauthorized",
            ServiceError::BadCredentials => "bad_credentials",
            ServiceError::NoTasksLeft(_) => "no_tasks_left",
            ServiceError::UnknownWord(_) => "unknown_word",
            ServiceError::WordClosed(_) => "word_closed",
            ServiceError::DuplicateWord(_) => "duplicate_word",
            ServiceError::UnknownRequest(_) => "unknown_request",
            ServiceError::UnknownSubmission(_) => "unknown_submission",
            ServiceError::AlreadyReviewed(_) => "already_reviewed",
            ServiceError::EmptyField(_) => "empty_field",
            ServiceError::Validation(ValidationError::WrongTagSet { .. }) => "wrong_tag_set",
            ServiceError::Validation(ValidationError::MissingSecondary) => "missing_secondary",
            ServiceError::Validation(ValidationError::UnexpectedSecondary) => {
                "unexpected_secondary"
            }
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::Store(_) | ServiceError::Outbox(_) => "storage",
        }
    }

    pub fn status(&self) -> u16 {
        match self {
            ServiceError::Unauthorized(_) | ServiceError::BadCredentials => 401,
            ServiceError::Forbidden => 403,
            ServiceError::UnknownWord(_)
            | ServiceError::UnknownRequest(_)
            | ServiceError::UnknownSubmission(_)
            | ServiceError::NoTasksLeft(_) => 404,
            ServiceError::DuplicateEmail(_)
            | ServiceError::NotPending(_)
            | ServiceError::AlreadyReviewed(_)
            | ServiceError::DuplicateWord(_)
            | ServiceError::WordClosed(_) => 409,
            ServiceError::IncompleteQuiz { .. }
            | ServiceError::InvalidAnswer { .. }
            | ServiceError::EmptyField(_)
            | ServiceError::Validation(_) => 422,
            ServiceError::BadRequest(_) => 400,
            ServiceError::Store(_) | ServiceError::Outbox(_) => 500,
        }
    }
}

/// Problems found while opening the service: configuration, data files and
/// the event log.
#[derive(Debug, Error)]
pub enum StartupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Inventory(#[from] InventoryError),
    #[error(transparent)]
    Quiz(#[from] QuizError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Service(#[from] ServiceError),
}
