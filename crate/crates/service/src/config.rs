//! Service configuration: a TOML file, then `SENSECROWD_*` environment
//! variables on top.

use std::path::{Path, PathBuf};

use sensecrowd_core::UncertaintyPolicy;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: String,
    /// Holds `events.jsonl` and `outbox.jsonl`.
    pub data_dir: PathBuf,
    pub session_ttl_secs: u64,
    pub quiz_bank: Option<PathBuf>,
    pub inventory: Option<PathBuf>,
    pub guidelines: Option<PathBuf>,
    /// Built UI assets served at `/`, if any.
    pub static_dir: Option<PathBuf>,
    /// Created as the admin account on first start when both are set.
    pub admin_email: Option<String>,
    pub admin_password: Option<String>,
    pub uncertainty: UncertaintyPolicy,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen: "127.0.0.1:8080".into(),
            data_dir: PathBuf::from("data"),
            session_ttl_secs: 24 * 60 * 60,
            quiz_bank: None,
            inventory: None,
            guidelines: None,
            static_dir: None,
            admin_email: None,
            admin_password: None,
            uncertainty: UncertaintyPolicy::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        source: toml::de::Error,
    },
    #[error("environment variable {name}: {message}")]
    Env { name: &'static str, message: String },
    #[error("{0}")]
    Invalid(String),
}

impl ServiceConfig {
    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config: ServiceConfig = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.rebase(base);
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.data_dir);
        for p in [
            &mut self.quiz_bank,
            &mut self.inventory,
            &mut self.guidelines,
            &mut self.static_dir,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    /// Applies overrides from the process environment.
    pub fn apply_env(&mut self) -> Result<(), ConfigError> {
        self.apply_overrides(|name| std::env::var(name).ok())
    }

    /// Applies overrides from any lookup function; `apply_env` passes the
    /// real environment.
    pub fn apply_overrides(
        &mut self,
        lookup: impl Fn(&str) -> Option<String>,
    ) -> Result<(), ConfigError> {
        if let Some(v) = lookup("SENSECROWD_LISTEN") {
            self.listen = v;
        }
        if let Some(v) = lookup("SENSECROWD_DATA_DIR") {
            self.data_dir = v.into();
        }
        if let Some(v) = lookup("SENSECROWD_SESSION_TTL_SECS") {
            self.session_ttl_secs = v.parse().map_err(|e| ConfigError::Env {
                name: "SENSECROWD_SESSION_TTL_SECS",
                message: format!("{e}"),
            })?;
        }
        let paths: [(&str, &mut Option<PathBuf>); 4] = [
            ("SENSECROWD_QUIZ_BANK", &mut self.quiz_bank),
            ("SENSECROWD_INVENTORY", &mut self.inventory),
            ("SENSECROWD_GUIDELINES", &mut self.guidelines),
            ("SENSECROWD_STATIC_DIR", &mut self.static_dir),
        ];
        for (name, slot) in paths {
            if let Some(v) = lookup(name) {
                *slot = Some(v.into());
            }
        }
        if let Some(v) = lookup("SENSECROWD_ADMIN_EMAIL") {
            self.admin_email = Some(v);
        }
        if let Some(v) = lookup("SENSECROWD_ADMIN_PASSWORD") {
            self.admin_password = Some(v);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.session_ttl_secs == 0 {
            return Err(ConfigError::Invalid("session_ttl_secs must be positive".into()));
        }
        let u = self.uncertainty;
        if !(u.threshold > 0.0 && u.threshold <= 1.0) || u.min_annotations == 0 {
            return Err(ConfigError::Invalid(
                "uncertainty.threshold must be in (0, 1] and min_annotations at least 1".into(),
            ));
        }
        if self.admin_email.is_some() != self.admin_password.is_some() {
            return Err(ConfigError::Invalid(
                "admin_email and admin_password must be given together".into(),
            ));
        }
        Ok(())
    }
}
