//! Multi-turn chat sessions against live, replayed or mocked providers.

mod live;
mod mock;
mod replay;
mod session;
mod transcript;

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use live::{LiveProvider, RateLimiter};
pub use mock::{mock_predict, MockError, MockProvider, MockSettings};
pub use replay::ReplayProvider;
pub use session::{predict_with_repair, run_script};
pub use transcript::{SessionTranscript, TranscriptMetadata, REDACTED};

use crate::prompt::{ChatTurn, ParseError};
use crate::skeleton::SkeletonSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Live,
    Replay,
    Mock,
}

impl std::str::FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(ProviderKind::Live),
            "replay" => Ok(ProviderKind::Replay),
            "mock" => Ok(ProviderKind::Mock),
            other => Err(format!("unknown provider {other:?} (expected live, replay or mock)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    /// Chat-completions URL (live).
    pub endpoint: Option<String>,
    pub model_name: Option<String>,
    /// Name of the environment variable holding the bearer token (live).
    pub auth_env: Option<String>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: u64,
    pub rate_limit_per_min: u32,
    /// Retries after a transport failure or 429 before the session fails.
    pub max_retries: u32,
    pub backoff_initial_ms: u64,
    pub backoff_max_ms: u64,
    /// Recorded transcript for replay: a single file, or a directory laid
    /// out like the pipeline's transcript output.
    pub transcripts: Option<PathBuf>,
    pub mock: MockSettings,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            kind: ProviderKind::Mock,
            endpoint: None,
            model_name: None,
            auth_env: None,
            temperature: 0.0,
            max_tokens: 4096,
            timeout_secs: 120,
            rate_limit_per_min: 60,
            max_retries: 5,
            backoff_initial_ms: 1000,
            backoff_max_ms: 60_000,
            transcripts: None,
            mock: MockSettings::default(),
        }
    }
}

impl ProviderConfig {
    pub fn mock() -> Self {
        ProviderConfig::default()
    }

    pub fn replay(transcripts: impl Into<PathBuf>) -> Self {
        ProviderConfig {
            kind: ProviderKind::Replay,
            transcripts: Some(transcripts.into()),
            ..ProviderConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let bad = |m: &str| Err(GatewayError::Config(m.to_string()));
        match self.kind {
            ProviderKind::Live => {
                if self.endpoint.as_deref().is_none_or(str::is_empty) {
                    return bad("live provider needs an endpoint");
                }
                if self.auth_env.as_deref().is_none_or(str::is_empty) {
                    return bad("live provider needs auth_env naming the token variable");
                }
                if self.model_name.as_deref().is_none_or(str::is_empty) {
                    return bad("live provider needs a model_name");
                }
            }
            ProviderKind::Replay if self.transcripts.is_none() => {
                return bad("replay provider needs a transcripts path");
            }
            _ => {}
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return bad("temperature must be finite and non-negative");
        }
        if self.rate_limit_per_min == 0 {
            return bad("rate_limit_per_min must be positive");
        }
        if self.max_tokens == 0 || self.timeout_secs == 0 {
            return bad("max_tokens and timeout_secs must be positive");
        }
        Ok(())
    }

    /// sha256 of the canonical JSON form. Holds no secret: only the name of
    /// the token variable is part of the config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }

    /// Token values that must never reach a transcript or log.
    pub fn secrets(&self) -> Vec<String> {
        self.auth_env
            .as_deref()
            .and_then(|name| std::env::var(name).ok())
            .filter(|v| !v.is_empty())
            .into_iter()
            .collect()
    }

    pub(crate) fn backoff(&self, attempt: u32) -> Duration {
        let ms = self
            .backoff_initial_ms
            .saturating_mul(1u64 << attempt.min(30))
            .min(self.backoff_max_ms);
        Duration::from_millis(ms)
    }
}

/// Per-session inputs a provider may need beyond its config.
#[derive(Clone)]
pub struct SessionContext<'a> {
    /// Name used for fault targeting and in logs, usually the sample id.
    pub session: &'a str,
    pub skeleton: &'a SkeletonSpec,
    pub j_frames: usize,
    pub precision: usize,
    /// Replay file for this session; falls back to the configured path.
    pub replay_file: Option<PathBuf>,
    /// Shared across sessions so concurrent workers respect one rate limit.
    pub limiter: Option<Arc<RateLimiter>>,
}

/// One failed reply attempt.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProviderError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("rate limited by provider")]
    RateLimited { retry_after: Option<Duration> },
    #[error("replay mismatch at turn {turn}: {diff}")]
    ReplayMismatch { turn: usize, diff: String },
    #[error("recorded transcript has no reply for turn {turn}")]
    ReplayExhausted { turn: usize },
    #[error("{0}")]
    Fatal(String),
}

impl ProviderError {
    pub(crate) fn retryable(&self) -> bool {
        matches!(self, ProviderError::Transport(_) | ProviderError::RateLimited { .. })
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("turn {index} breaks user/assistant alternation")]
    Alternation { index: usize },
    #[error("io: {0}")]
    Io(String),
    #[error("bad transcript: {0}")]
    BadTranscript(String),
    #[error("provider config: {0}")]
    Config(String),
    #[error("session stopped at turn {turn}: {source}")]
    Interrupted {
        turn: usize,
        source: ProviderError,
        transcript: Box<SessionTranscript>,
    },
    #[error("answer still unparseable after {attempts} attempts: {last_error}")]
    UnparseableAfterRepairs {
        attempts: usize,
        last_error: ParseError,
        transcript: Box<SessionTranscript>,
    },
}

impl GatewayError {
    /// Partial or complete transcript of the failed session, if one exists.
    pub fn transcript(&self) -> Option<&SessionTranscript> {
        match self {
            GatewayError::Interrupted { transcript, .. } | GatewayError::UnparseableAfterRepairs { transcript, .. } => {
                Some(transcript)
            }
            _ => None,
        }
    }
}

pub trait ChatProvider: Send {
    fn kind(&self) -> ProviderKind;

    fn model_name(&self) -> String;

    /// Assistant reply to the last user turn of `history`.
    fn reply(&mut self, history: &[ChatTurn]) -> Result<String, ProviderError>;
}

/// Replay file for `session` under a transcripts directory, or the path
/// itself when it names a file.
pub fn replay_path(transcripts: &Path, action: &str, session: &str) -> PathBuf {
    if transcripts.is_dir() {
        transcripts.join(action).join(format!("{session}.jsonl"))
    } else {
        transcripts.to_path_buf()
    }
}

pub fn connect(config: &ProviderConfig, ctx: &SessionContext<'_>) -> Result<Box<dyn ChatProvider>, GatewayError> {
    config.validate()?;
    Ok(match config.kind {
        ProviderKind::Mock => Box::new(MockProvider::new(
            ctx.skeleton.clone(),
            ctx.j_frames,
            ctx.precision,
            config.mock.clone(),
            ctx.session,
        )),
        ProviderKind::Replay => {
            let path = ctx
                .replay_file
                .clone()
                .or_else(|| config.transcripts.clone())
                .expect("validated");
            Box::new(ReplayProvider::from_transcript(SessionTranscript::read(&path)?))
        }
        ProviderKind::Live => {
            let limiter = ctx
                .limiter
                .clone()
                .unwrap_or_else(|| Arc::new(RateLimiter::per_minute(config.rate_limit_per_min)));
            Box::new(LiveProvider::new(config, limiter)?)
        }
    })
}
