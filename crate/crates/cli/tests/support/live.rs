#![allow(dead_code)]

//! A real `sensecrowd serve` process driven over HTTP.

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdout, Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde_json::{json, Value};

pub const BIN: &str = env!("CARGO_BIN_EXE_sensecrowd");
pub const ADMIN_EMAIL: &str = "admin@example.org";
pub const ADMIN_PASSWORD: &str = "admin-secret";
/// Correct options of the bundled quiz.
const KEY: [usize; 5] = [0, 1, 2, 1, 0];

pub fn ensure(cond: bool, message: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(message.into())
    }
}

pub fn answers(correct: usize) -> Vec<usize> {
    KEY.iter()
        .enumerate()
        .map(|(i, &k)| if i < correct { k } else { (k + 1) % 4 })
        .collect()
}

pub struct LiveServer {
    child: Child,
    _stdout: BufReader<ChildStdout>,
    pub base: String,
    pub data_dir: PathBuf,
}

impl LiveServer {
    pub fn start(data_dir: &Path) -> Result<Self, String> {
        let mut child = Command::new(BIN)
            .args(["serve", "--listen", "127.0.0.1:0", "--data-dir"])
            .arg(data_dir)
            .env_remove("SENSECROWD_CONFIG")
            .env("SENSECROWD_ADMIN_EMAIL", ADMIN_EMAIL)
            .env("SENSECROWD_ADMIN_PASSWORD", ADMIN_PASSWORD)
            .env("RUST_LOG", "warn")
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| format!("cannot start {BIN}: {e}"))?;
        let mut stdout = BufReader::new(child.stdout.take().unwrap());
        let mut line = String::new();
        stdout.read_line(&mut line).map_err(|e| e.to_string())?;
        let base = line
            .trim()
            .strip_prefix("listening on ")
            .ok_or_else(|| format!("unexpected first line `{line}`"))?
            .to_string();
        Ok(LiveServer {
            child,
            _stdout: stdout,
            base,
            data_dir: data_dir.to_path_buf(),
        })
    }

    /// SIGKILL, no chance to clean up.
    pub fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }

    pub fn call(&self, method: &str, path: &str, token: Option<&str>, body: Option<Value>) -> Result<(u16, Value), String> {
        call(&self.base, method, path, token, body)
    }

    pub fn text(&self, path: &str) -> Result<String, String> {
        ureq::get(&format!("{}{path}", self.base))
            .call()
            .map_err(|e| e.to_string())?
            .into_string()
            .map_err(|e| e.to_string())
    }

    pub fn login(&self, email: &str, password: &str) -> Result<String, String> {
        let (status, body) = self.call("POST", "/api/login", None, Some(json!({"email": email, "password": password})))?;
        ensure(status == 200, format!("login {email}: {status} {body}"))?;
        Ok(body["token"].as_str().unwrap_or_default().to_string())
    }

    pub fn outbox_password(&self, email: &str) -> Result<String, String> {
        let text = std::fs::read_to_string(self.data_dir.join("outbox.jsonl")).map_err(|e| e.to_string())?;
        text.lines()
            .filter_map(|l| serde_json::from_str::<Value>(l).ok())
            .filter(|m| m["to"] == email)
            .last()
            .and_then(|m| m["password"].as_str().map(String::from))
            .ok_or_else(|| format!("no outbox message for {email}"))
    }

    /// Request, admin approval and first login. Returns the token.
    pub fn register(&self, admin: &str, email: &str, correct: usize) -> Result<String, String> {
        let form = json!({
            "name": "A Person",
            "email": email,
            "profession": "student",
            "education": "BA",
            "quiz_answers": answers(correct),
        });
        let (status, body) = self.call("POST", "/api/credential-requests", None, Some(form))?;
        ensure(status == 201, format!("credential request: {status} {body}"))?;
        let id = body["request_id"].as_str().unwrap_or_default().to_string();
        let (status, body) = self.call("POST", &format!("/api/requests/{id}/approve"), Some(admin), None)?;
        ensure(status == 200, format!("approve: {status} {body}"))?;
        ensure(body["score"] == 2 * correct, format!("score {}", body["score"]))?;
        let password = self.outbox_password(email)?;
        self.login(email, &password)
    }
}

impl Drop for LiveServer {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub fn call(base: &str, method: &str, path: &str, token: Option<&str>, body: Option<Value>) -> Result<(u16, Value), String> {
    let mut req = ureq::request(method, &format!("{base}{path}")).timeout(Duration::from_secs(10));
    if let Some(t) = token {
        req = req.set("Authorization", &format!("Bearer {t}"));
    }
    let resp = match body {
        Some(b) => req.send_json(b),
        None => req.call(),
    };
    let resp = match resp {
        Ok(r) => r,
        Err(ureq::Error::Status(_, r)) => r,
        Err(e) => return Err(e.to_string()),
    };
    let status = resp.status();
    let text = resp.into_string().map_err(|e| e.to_string())?;
    let value = if text.is_empty() {
        Value::Null
    } else {
        serde_json::from_str(&text).unwrap_or(Value::String(text))
    };
    Ok((status, value))
}

const LEXICON: &str = r#"{"word_id":"w000001","surface":"telusu","pos":"verb","gloss":"know","example":"nāku telusu","resolved":null,"status":"active"}
{"word_id":"w000002","surface":"cālā","pos":"adverb","gloss":"very","example":"cālā bāgundi","resolved":null,"status":"active"}
"#;

pub fn import_fixture_words(data_dir: &Path) -> Result<(), String> {
    let file = data_dir.with_extension("lexicon.jsonl");
    std::fs::write(&file, LEXICON).map_err(|e| e.to_string())?;
    let out = Command::new(BIN)
        .args(["import-lexicon", "--input"])
        .arg(&file)
        .arg("--data-dir")
        .arg(data_dir)
        .env_remove("SENSECROWD_CONFIG")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(
        out.status.success(),
        format!("import-lexicon: {}", String::from_utf8_lossy(&out.stderr)),
    )
}

#[derive(Debug, Default)]
pub struct RoundTrip {
    /// Writes acknowledged while the process was being killed.
    pub acknowledged_under_kill: usize,
}

fn annotate(server: &LiveServer, token: &str, primary: &str) -> Result<(u16, Value), String> {
    server.call(
        "POST",
        "/api/annotations",
        Some(token),
        Some(json!({"word_id": "w000001", "kind": "sense", "primary_tag": primary, "secondary_tag": "ToBe"})),
    )
}

/// request -> approve -> login -> task -> annotate -> conflict -> export,
/// then SIGKILL and restart, then SIGKILL during a stream of writes and
/// restart again. Every acknowledged write must be back.
pub fn round_trip_with_restarts(data_dir: &Path) -> Result<RoundTrip, String> {
    import_fixture_words(data_dir)?;
    let server = LiveServer::start(data_dir)?;
    let admin = server.login(ADMIN_EMAIL, ADMIN_PASSWORD)?;
    let strong = server.register(&admin, "strong@example.org", 5)?;
    let weak = server.register(&admin, "weak@example.org", 2)?;

    let (status, task) = server.call("GET", "/api/tasks/next?kind=sense&pos=verb", Some(&strong), None)?;
    ensure(status == 200 && task["word_id"] == "w000001", format!("task: {status} {task}"))?;
    ensure(task["allowed_primary"].as_array().map(Vec::len) == Some(8), "verb task offers 8 options")?;

    let (status, ack) = annotate(&server, &strong, "ToKnow")?;
    ensure(status == 200 && ack["resolved"]["resolution"] == "unanimous", format!("first annotation: {ack}"))?;
    let (status, ack) = annotate(&server, &weak, "ToDo")?;
    ensure(
        status == 200 && ack["resolved"]["resolution"] == "score_win" && ack["resolved"]["primary_tag"] == "ToKnow",
        format!("conflict: {ack}"),
    )?;

    let export = server.text("/api/export?pos=verb&kind=sense")?;
    let lines: Vec<Value> = export.lines().filter_map(|l| serde_json::from_str(l).ok()).collect();
    ensure(lines.len() == 1, format!("export has {} lines", lines.len()))?;
    ensure(
        lines[0]["resolved"] == json!({"kind": "sense", "primary": "ToKnow", "secondary": "ToBe"}),
        format!("export: {export}"),
    )?;
    let (status, _) = server.call(
        "POST",
        "/api/words",
        Some(&strong),
        Some(json!({"surface": "pustakaṃ", "gloss": "book", "example": "maṃci pustakaṃ"})),
    )?;
    ensure(status == 201, "add word")?;
    let full_export = server.text("/api/export")?;

    server.kill();
    let server = LiveServer::start(data_dir)?;
    ensure(server.text("/api/export")? == full_export, "export changed across a kill")?;
    let (status, task) = server.call("GET", "/api/tasks/next", Some(&strong), None)?;
    ensure(status == 200 && task["word_id"] == "w000002", format!("session or annotation lost: {status} {task}"))?;
    let (status, subs) = server.call("GET", "/api/submissions", Some(&admin), None)?;
    ensure(
        status == 200 && subs.as_array().map(Vec::len) == Some(1),
        format!("submissions after restart: {subs}"),
    )?;
    let weak_password = server.outbox_password("weak@example.org")?;
    server.login("weak@example.org", &weak_password)?;
    let (_, ack) = annotate(&server, &weak, "ToDo")?;
    ensure(ack["replaced"] == true && ack["annotation_count"] == 2, format!("resubmit: {ack}"))?;

    // Kill while a client keeps writing.
    let acked = Arc::new(Mutex::new(Vec::new()));
    let stop = Arc::new(AtomicBool::new(false));
    let writer = {
        let (base, token, acked, stop) = (server.base.clone(), strong.clone(), acked.clone(), stop.clone());
        std::thread::spawn(move || {
            for i in 0.. {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let body = json!({"surface": format!("k{i}"), "gloss": "g", "example": "e"});
                match call(&base, "POST", "/api/words", Some(&token), Some(body)) {
                    Ok((201, _)) => acked.lock().unwrap().push(format!("k{i}")),
                    _ => break,
                }
            }
        })
    };
    std::thread::sleep(Duration::from_millis(300));
    server.kill();
    stop.store(true, Ordering::SeqCst);
    let _ = writer.join();
    let acked = acked.lock().unwrap().clone();
    ensure(!acked.is_empty(), "no write was acknowledged before the kill")?;

    let server = LiveServer::start(data_dir)?;
    let (status, subs) = server.call("GET", "/api/submissions", Some(&admin), None)?;
    ensure(status == 200, format!("submissions: {status}"))?;
    let stored: Vec<&str> = subs
        .as_array()
        .map(|a| a.iter().filter_map(|s| s["surface"].as_str()).collect())
        .unwrap_or_default();
    for surface in &acked {
        ensure(stored.contains(&surface.as_str()), format!("acknowledged word {surface} lost"))?;
    }
    ensure(server.text("/api/export")? == full_export, "lexicon changed by submissions")?;
    Ok(RoundTrip {
        acknowledged_under_kill: acked.len(),
    })
}
