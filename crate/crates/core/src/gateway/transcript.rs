use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GatewayError, ProviderKind};
use crate::prompt::{ChatTurn, Sender};

pub const REDACTED: &str = "[REDACTED]";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptMetadata {
    pub provider: ProviderKind,
    pub model: String,
    pub config_hash: String,
    /// Wall-clock bounds in Unix milliseconds. Left empty by the mock and
    /// replay providers so their transcripts stay byte-reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_at_ms: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    metadata: TranscriptMetadata,
}

/// Append-only record of a chat session; user and assistant turns alternate,
/// starting with a user turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub metadata: TranscriptMetadata,
    turns: Vec<ChatTurn>,
}

impl SessionTranscript {
    pub fn new(metadata: TranscriptMetadata) -> Self {
        SessionTranscript {
            metadata,
            turns: Vec::new(),
        }
    }

    pub fn turns(&self) -> &[ChatTurn] {
        &self.turns
    }

    pub fn push(&mut self, turn: ChatTurn) -> Result<(), GatewayError> {
        let expected = if self.turns.len().is_multiple_of(2) {
            Sender::User
        } else {
            Sender::Assistant
        };
        if turn.sender != expected {
            return Err(GatewayError::Alternation {
                index: self.turns.len() + 1,
            });
        }
        self.turns.push(turn);
        Ok(())
    }

    pub fn last_assistant_text(&self) -> Option<&str> {
        self.turns
            .iter()
            .rev()
            .find(|t| t.sender == Sender::Assistant)
            .map(|t| t.text.as_str())
    }

    /// Metadata header line followed by one line per turn. Every occurrence of
    /// a secret is replaced before serialization.
    pub fn to_jsonl(&self, secrets: &[String]) -> String {
        let scrub = |s: String| {
            secrets
                .iter()
                .filter(|x| !x.is_empty())
                .fold(s, |acc, secret| acc.replace(secret.as_str(), REDACTED))
        };
        let mut out = scrub(
            serde_json::to_string(&Header {
                metadata: self.metadata.clone(),
            })
            .expect("metadata serializes"),
        );
        out.push('\n');
        for t in &self.turns {
            let mut turn = t.clone();
            turn.text = scrub(turn.text);
            out.push_str(&serde_json::to_string(&turn).expect("turn serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, GatewayError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Header = serde_json::from_str(
            lines
                .next()
                .ok_or_else(|| GatewayError::BadTranscript("empty transcript".into()))?,
        )
        .map_err(|e| GatewayError::BadTranscript(format!("header: {e}")))?;
        let mut transcript = SessionTranscript::new(header.metadata);
        for (i, line) in lines.enumerate() {
            let turn: ChatTurn =
                serde_json::from_str(line).map_err(|e| GatewayError::BadTranscript(format!("turn {}: {e}", i + 1)))?;
            transcript.push(turn)?;
        }
        Ok(transcript)
    }

    pub fn write(&self, path: &Path, secrets: &[String]) -> Result<(), GatewayError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| GatewayError::Io(format!("{}: {e}", dir.display())))?;
        }
        std::fs::write(path, self.to_jsonl(secrets)).map_err(|e| GatewayError::Io(format!("{}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path).map_err(|e| GatewayError::Io(format!("{}: {e}", path.display())))?;
        Self::from_jsonl(&text)
    }
}
