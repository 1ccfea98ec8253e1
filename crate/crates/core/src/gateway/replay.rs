use super::{ChatProvider, ProviderError, ProviderKind, SessionTranscript};
use crate::prompt::{ChatTurn, Sender};

/// Answers from a recorded transcript, checking that every user turn sent
/// matches the recorded one at the same position.
pub struct ReplayProvider {
    recorded: SessionTranscript,
}

impl ReplayProvider {
    pub fn from_transcript(recorded: SessionTranscript) -> Self {
        ReplayProvider { recorded }
    }
}

/// First differing line of two texts, 1-based, for mismatch messages.
fn first_difference(recorded: &str, sent: &str) -> String {
    let mut a = recorded.lines();
    let mut b = sent.lines();
    let mut line = 1;
    loop {
        match (a.next(), b.next()) {
            (Some(x), Some(y)) if x == y => line += 1,
            (None, None) => return "texts differ only in line endings".into(),
            (x, y) => {
                return format!(
                    "line {line}: recorded {:?}, sent {:?}",
                    x.unwrap_or("<end>"),
                    y.unwrap_or("<end>")
                )
            }
        }
    }
}

impl ChatProvider for ReplayProvider {
    fn kind(&self) -> ProviderKind {
        ProviderKind::Replay
    }

    fn model_name(&self) -> String {
        self.recorded.metadata.model.clone()
    }

    fn reply(&mut self, history: &[ChatTurn]) -> Result<String, ProviderError> {
        let turn = history.len();
        let sent = history
            .last()
            .ok_or_else(|| ProviderError::Fatal("empty history".into()))?;
        let recorded = self.recorded.turns();
        let Some(expected) = recorded.get(turn - 1) else {
            return Err(ProviderError::ReplayExhausted { turn });
        };
        if expected.sender != Sender::User {
            return Err(ProviderError::ReplayMismatch {
                turn,
                diff: "recorded turn is an assistant reply".into(),
            });
        }
        if expected.tag != sent.tag {
            return Err(ProviderError::ReplayMismatch {
                turn,
                diff: format!("recorded tag {}, sent {}", expected.tag, sent.tag),
            });
        }
        if expected.text != sent.text {
            return Err(ProviderError::ReplayMismatch {
                turn,
                diff: first_difference(&expected.text, &sent.text),
            });
        }
        match recorded.get(turn) {
            Some(answer) => Ok(answer.text.clone()),
            None => Err(ProviderError::ReplayExhausted { turn }),
        }
    }
}
