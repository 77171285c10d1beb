//! Policy and service configuration: TOML file plus environment overrides.

use std::fs;
use std::path::{Path, PathBuf};

use mmprove_prover::policy::BaselineConfig;
use mmprove_prover::LmConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {msg}")]
    File { path: PathBuf, msg: String },
    #[error("environment variable {var}: {msg}")]
    Env { var: String, msg: String },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    /// Mechanical unification suggester ranked by theorem usage.
    #[default]
    Baseline,
    /// Replays recorded proof steps; proves exactly the known proofs.
    Replay,
    /// A text-completion endpoint.
    Lm,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Baseline => "baseline",
            PolicyKind::Replay => "replay",
            PolicyKind::Lm => "lm",
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "baseline" => Ok(PolicyKind::Baseline),
            "replay" => Ok(PolicyKind::Replay),
            "lm" => Ok(PolicyKind::Lm),
            other => Err(format!("unknown policy `{other}` (expected baseline, replay or lm)")),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub baseline: BaselineConfig,
    pub lm: LmConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub db: PathBuf,
    /// Extra `.mm` files appended to the library.
    pub append: Vec<PathBuf>,
    pub bind: String,
    /// Idle sessions are dropped after this many seconds.
    pub session_ttl_secs: u64,
    pub max_sessions: usize,
    /// Search jobs allowed to run at once.
    pub max_jobs: usize,
    /// Upper bound on `max_expansions` a job may request.
    pub max_job_expansions: usize,
    pub policy: PolicyConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            db: PathBuf::from("data/fragment.mm"),
            append: Vec::new(),
            bind: "127.0.0.1:8080".into(),
            session_ttl_secs: 3600,
            max_sessions: 1024,
            max_jobs: 4,
            max_job_expansions: 1024,
            policy: PolicyConfig::default(),
        }
    }
}

impl ServiceConfig {
    /// Defaults, overridden by `path` when given.
    pub fn load(path: Option<&Path>) -> Result<ServiceConfig, ConfigError> {
        let Some(path) = path else {
            return Ok(ServiceConfig::default());
        };
        let err = |msg: String| ConfigError::File {
            path: path.to_path_buf(),
            msg,
        };
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        toml::from_str(&text).map_err(|e| err(e.to_string()))
    }

    /// Applies `MMPROVE_*` overrides read through `var`.
    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        fn parse<T: std::str::FromStr>(name: &str, v: &str) -> Result<T, ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            v.parse().map_err(|e: T::Err| ConfigError::Env {
                var: name.into(),
                msg: e.to_string(),
            })
        }
        if let Some(v) = var("MMPROVE_DB") {
            self.db = PathBuf::from(v);
        }
        if let Some(v) = var("MMPROVE_BIND") {
            self.bind = v;
        }
        if let Some(v) = var("MMPROVE_POLICY") {
            self.policy.kind = parse("MMPROVE_POLICY", &v)?;
        }
        if let Some(v) = var("MMPROVE_LM_ENDPOINT") {
            self.policy.lm.endpoint = v;
        }
        if let Some(v) = var("MMPROVE_SESSION_TTL") {
            self.session_ttl_secs = parse("MMPROVE_SESSION_TTL", &v)?;
        }
        if let Some(v) = var("MMPROVE_MAX_JOBS") {
            self.max_jobs = parse("MMPROVE_MAX_JOBS", &v)?;
        }
        Ok(())
    }
}
