use std::time::{SystemTime, UNIX_EPOCH};

use super::{
    ChatProvider, GatewayError, ProviderConfig, ProviderError, ProviderKind, SessionTranscript, TranscriptMetadata,
};
use crate::prompt::{
    parse_prediction_with, templates, ChatTurn, DemonstrationScript, ParseOptions, ParsedPrediction, TurnTag,
};
use crate::skeleton::SkeletonSpec;

fn now_ms() -> Option<u64> {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .ok()
        .map(|d| d.as_millis() as u64)
}

struct Session<'a> {
    provider: &'a mut dyn ChatProvider,
    config: &'a ProviderConfig,
    transcript: SessionTranscript,
}

impl<'a> Session<'a> {
    fn start(provider: &'a mut dyn ChatProvider, config: &'a ProviderConfig) -> Self {
        let live = provider.kind() == ProviderKind::Live;
        let metadata = TranscriptMetadata {
            provider: provider.kind(),
            model: provider.model_name(),
            config_hash: config.hash(),
            started_at_ms: if live { now_ms() } else { None },
            finished_at_ms: None,
        };
        Session {
            provider,
            config,
            transcript: SessionTranscript::new(metadata),
        }
    }

    fn snapshot(&mut self) -> Box<SessionTranscript> {
        if self.transcript.metadata.provider == ProviderKind::Live {
            self.transcript.metadata.finished_at_ms = now_ms();
        }
        Box::new(self.transcript.clone())
    }

    /// Sends one user turn and records the reply, retrying transport
    /// failures and rate limits with capped exponential backoff.
    fn exchange(&mut self, turn: ChatTurn) -> Result<(), GatewayError> {
        let index = self.transcript.turns().len() + 1;
        self.transcript.push(turn)?;
        let mut attempt = 0;
        loop {
            match self.provider.reply(self.transcript.turns()) {
                Ok(text) => return self.transcript.push(ChatTurn::assistant(text)),
                Err(e) if e.retryable() && attempt < self.config.max_retries => {
                    let wait = match &e {
                        ProviderError::RateLimited { retry_after: Some(d) } => *d,
                        _ => self.config.backoff(attempt),
                    };
                    log::warn!("turn {index}: {e}; retrying in {wait:?}");
                    std::thread::sleep(wait);
                    attempt += 1;
                }
                Err(source) => {
                    return Err(GatewayError::Interrupted {
                        turn: index,
                        source,
                        transcript: self.snapshot(),
                    })
                }
            }
        }
    }

    fn run(&mut self, script: &DemonstrationScript) -> Result<(), GatewayError> {
        for turn in &script.turns {
            self.exchange(turn.clone())?;
        }
        Ok(())
    }

    fn finish(mut self) -> SessionTranscript {
        *self.snapshot()
    }
}

/// Sends every script turn in order, each after the previous reply, and
/// returns the full exchange. The last assistant turn answers the query.
pub fn run_script(
    script: &DemonstrationScript,
    provider: &mut dyn ChatProvider,
    config: &ProviderConfig,
) -> Result<SessionTranscript, GatewayError> {
    let mut session = Session::start(provider, config);
    session.run(script)?;
    Ok(session.finish())
}

/// Runs the script and parses the final answer. Each parse failure is
/// quoted back in a repair turn, up to `max_repairs` times.
pub fn predict_with_repair(
    script: &DemonstrationScript,
    provider: &mut dyn ChatProvider,
    config: &ProviderConfig,
    skeleton: &SkeletonSpec,
    max_repairs: usize,
) -> Result<(ParsedPrediction, SessionTranscript), GatewayError> {
    let j = script.j_frames;
    let options = ParseOptions {
        fps: script.fps,
        min_frame_number: Some(script.l_frames + 1),
    };
    let mut session = Session::start(provider, config);
    session.run(script)?;
    let mut attempts = 0;
    loop {
        attempts += 1;
        let answer = session.transcript.last_assistant_text().unwrap_or_default();
        match parse_prediction_with(answer, j, skeleton, &options) {
            Ok(parsed) => return Ok((parsed, session.finish())),
            Err(e) if attempts <= max_repairs => {
                log::info!("attempt {attempts} unparseable: {e}");
                session.exchange(ChatTurn::user(
                    TurnTag::Repair,
                    templates::repair_message(&e.to_string(), j),
                ))?;
            }
            Err(last_error) => {
                return Err(GatewayError::UnparseableAfterRepairs {
                    attempts,
                    last_error,
                    transcript: session.snapshot(),
                })
            }
        }
    }
}
