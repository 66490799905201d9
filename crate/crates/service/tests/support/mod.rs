#![allow(dead_code)]

use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;

use sensecrowd_core::lexicon_file::LexiconRecord;
use sensecrowd_core::{EntryStatus, PartOfSpeech, WordId};
use sensecrowd_service::service::{Caller, Clock, CredentialForm, OutboxMessage};
use sensecrowd_service::{Service, ServiceConfig};
use tempfile::TempDir;

pub const ADMIN_EMAIL: &str = "admin@example.org";
pub const ADMIN_PASSWORD: &str = "admin-secret";
/// Correct options of the bundled five-question quiz.
pub const KEY: [usize; 5] = [0, 1, 2, 1, 0];
pub const T0: i64 = 1_700_000_000;

/// A clock the test moves by hand.
#[derive(Clone)]
pub struct TestClock(Arc<AtomicI64>);

impl TestClock {
    pub fn new() -> Self {
        TestClock(Arc::new(AtomicI64::new(T0)))
    }
    pub fn advance(&self, secs: i64) {
        self.0.fetch_add(secs, Ordering::SeqCst);
    }
    pub fn clock(&self) -> Clock {
        let t = self.0.clone();
        Arc::new(move || t.load(Ordering::SeqCst))
    }
}

pub fn config(dir: &TempDir) -> ServiceConfig {
    ServiceConfig {
        data_dir: dir.path().join("data"),
        admin_email: Some(ADMIN_EMAIL.into()),
        admin_password: Some(ADMIN_PASSWORD.into()),
        ..ServiceConfig::default()
    }
}

pub struct Harness {
    pub dir: TempDir,
    pub clock: TestClock,
    pub svc: Arc<Service>,
}

impl Harness {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        Self::open_in(dir, TestClock::new())
    }

    pub fn open_in(dir: TempDir, clock: TestClock) -> Self {
        let (svc, _) = Service::open_with_clock(&config(&dir), clock.clock()).unwrap();
        Harness {
            dir,
            clock,
            svc: Arc::new(svc),
        }
    }

    /// Drops the service and opens a new one on the same directory.
    pub fn reopen(self) -> Self {
        let Harness { dir, clock, svc } = self;
        drop(svc);
        Self::open_in(dir, clock)
    }

    pub fn admin(&self) -> Caller {
        let login = self.svc.login(ADMIN_EMAIL, ADMIN_PASSWORD).unwrap();
        self.svc.authenticate(Some(&login.token)).unwrap()
    }

    /// Requests, approves and logs in an annotator who answers `correct` of
    /// the quiz questions right, so their score is `2 * correct`.
    pub fn annotator(&self, email: &str, correct: usize) -> Caller {
        let request = self.svc.request_credentials(form(email, correct)).unwrap();
        self.svc.approve_request(&self.admin(), &request.request_id).unwrap();
        let password = password_for(&self.svc, email);
        let login = self.svc.login(email, &password).unwrap();
        self.svc.authenticate(Some(&login.token)).unwrap()
    }

    pub fn add_words(&self, words: &[(&str, PartOfSpeech)]) {
        let start = self.svc.read(|s| s.entries.len());
        let records = words
            .iter()
            .enumerate()
            .map(|(i, &(surface, pos))| word(start + i + 1, surface, pos))
            .collect();
        self.svc.import(records).unwrap();
    }
}

pub fn word(n: usize, surface: &str, pos: PartOfSpeech) -> LexiconRecord {
    LexiconRecord {
        word_id: WordId(format!("w{n:06}")),
        surface: surface.into(),
        pos,
        gloss: format!("gloss of {surface}"),
        example: format!("example with {surface}"),
        resolved: None,
        status: EntryStatus::Active,
    }
}

pub fn answers(correct: usize) -> Vec<usize> {
    KEY.iter()
        .enumerate()
        .map(|(i, &k)| if i < correct { k } else { (k + 1) % 4 })
        .collect()
}

pub fn form(email: &str, correct: usize) -> CredentialForm {
    CredentialForm {
        name: "Test Person".into(),
        email: email.into(),
        profession: "teacher".into(),
        education: "MA".into(),
        quiz_answers: answers(correct),
    }
}

pub fn outbox(svc: &Service) -> Vec<OutboxMessage> {
    std::fs::read_to_string(svc.outbox_path())
        .unwrap_or_default()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

pub fn password_for(svc: &Service, email: &str) -> String {
    outbox(svc)
        .into_iter()
        .rev()
        .find(|m| m.to == email)
        .expect("an outbox message for the email")
        .password
}
