//! Proficiency quiz shown with the credential request form.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEFAULT_BANK: &str = include_str!("../assets/quiz.toml");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Question {
    pub prompt: String,
    pub options: Vec<String>,
    /// Index into `options`.
    pub answer: usize,
}

/// What the client sees: no answers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicQuestion {
    pub prompt: String,
    pub options: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuizBank {
    #[serde(rename = "question")]
    pub questions: Vec<Question>,
}

#[derive(Debug, Error)]
pub enum QuizError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Parse(#[from] toml::de::Error),
    #[error("quiz bank has no questions")]
    Empty,
    #[error("question {0} needs at least two options and an answer among them")]
    BadQuestion(usize),
}

impl Default for QuizBank {
    fn default() -> Self {
        QuizBank::from_toml_str(DEFAULT_BANK).expect("bundled quiz bank is valid")
    }
}

impl QuizBank {
    pub fn from_toml_str(text: &str) -> Result<Self, QuizError> {
        let bank: QuizBank = toml::from_str(text)?;
        if bank.questions.is_empty() {
            return Err(QuizError::Empty);
        }
        for (i, q) in bank.questions.iter().enumerate() {
            if q.options.len() < 2 || q.answer >= q.options.len() {
                return Err(QuizError::BadQuestion(i + 1));
            }
        }
        Ok(bank)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, QuizError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| QuizError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn public(&self) -> Vec<PublicQuestion> {
        self.questions
            .iter()
            .map(|q| PublicQuestion {
                prompt: q.prompt.clone(),
                options: q.options.clone(),
            })
            .collect()
    }

    /// Number of correct answers. The caller checks the length first.
    pub fn correct(&self, answers: &[usize]) -> usize {
        self.questions
            .iter()
            .zip(answers)
            .filter(|(q, a)| q.answer == **a)
            .count()
    }
}

/// `correct / total` scaled to 0..=10, halves rounded up.
pub fn scaled_score(correct: usize, total: usize) -> u8 {
    assert!(total > 0 && correct <= total);
    // round(10c/n) = floor((20c + n) / 2n) for non-negative values.
    ((20 * correct + total) / (2 * total)) as u8
}
