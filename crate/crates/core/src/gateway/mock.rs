//! Deterministic stand-in for a chat model: constant-velocity extrapolation
//! of whatever frames appear in the prompt, with optional scripted faults.

use serde::{Deserialize, Serialize};

use super::{ChatProvider, ProviderError, ProviderKind};
use crate::data::Pose;
use crate::prompt::{extract_frames, format_pose, ChatTurn, TurnTag};
use crate::skeleton::SkeletonSpec;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockSettings {
    pub seed: u64,
    /// Number of prediction answers (counting repairs) sent one frame short
    /// before the mock starts answering correctly.
    pub malformed_answers: usize,
    /// Never answer a prediction correctly.
    pub always_malformed: bool,
    /// Sessions the faults apply to; empty means all.
    pub fault_sessions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MockError {
    #[error("need at least 2 observed frames in the prompt, found {0}")]
    TooFewObserved(usize),
}

const ACKNOWLEDGEMENTS: [&str; 3] = [
    "Sure. Please share some examples of good prediction.",
    "Understood. Please show me examples of good prediction first.",
    "Of course. I am ready for the examples.",
];

const REVIEWS: [&str; 3] = [
    "My predictions are close to the correct answers, and the limb lengths stay the same across frames.",
    "I compared my predictions with the correct answers; they are similar and keep limb lengths constant.",
    "The correct answers match my predictions closely, with consistent limb lengths.",
];

/// Constant-velocity continuation of the frames found in `prompt`.
///
/// The velocity is the difference of the last two frames divided by the gap
/// between their frame numbers, so strided prompts extrapolate per frame.
/// Predicted frames are numbered on from the last observed one.
pub fn mock_predict(prompt: &str, j: usize, skeleton: &SkeletonSpec, precision: usize) -> Result<String, MockError> {
    let frames = extract_frames(prompt, skeleton);
    if frames.len() < 2 {
        return Err(MockError::TooFewObserved(frames.len()));
    }
    let (prev_no, prev) = &frames[frames.len() - 2];
    let (last_no, last) = &frames[frames.len() - 1];
    let gap = match (prev_no, last_no) {
        (Some(a), Some(b)) if b > a => (b - a) as f64,
        _ => 1.0,
    };
    let first_label = last_no.unwrap_or(frames.len());
    let velocity: Vec<[f64; 3]> = last
        .coords()
        .iter()
        .zip(prev.coords())
        .map(|(l, p)| [(l[0] - p[0]) / gap, (l[1] - p[1]) / gap, (l[2] - p[2]) / gap])
        .collect();

    let mut blocks = vec!["The observed frames show every joint moving at a steady velocity.".to_string()];
    for k in 1..=j {
        let step = k as f64;
        let coords = last
            .coords()
            .iter()
            .zip(&velocity)
            .map(|(c, v)| [c[0] + step * v[0], c[1] + step * v[1], c[2] + step * v[2]])
            .collect();
        let pose = Pose::new(coords).expect("finite inputs stay finite");
        let lines = format_pose(&pose, skeleton, precision).expect("pose built from skeleton frames");
        blocks.push(format!(
            "Frame {}:\nEach joint keeps moving along its current direction.\n{lines}",
            first_label + k
        ));
    }
    Ok(blocks.join("\n"))
}

pub struct MockProvider {
    skeleton: SkeletonSpec,
    j: usize,
    precision: usize,
    settings: MockSettings,
    faults_left: usize,
    faulty: bool,
}

impl MockProvider {
    pub fn new(skeleton: SkeletonSpec, j: usize, precision: usize, settings: MockSettings, session: &str) -> Self {
        let faulty = settings.fault_sessions.is_empty() || settings.fault_sessions.iter().any(|s| s == session);
        MockProvider {
            skeleton,
            j,
            precision,
            faults_left: settings.malformed_answers,
            settings,
            faulty,
        }
    }

    fn predict(&mut self, prompt: &str) -> Result<String, ProviderError> {
        let broken = self.faulty && (self.settings.always_malformed || self.faults_left > 0);
        let frames = if broken {
            self.faults_left = self.faults_left.saturating_sub(1);
            self.j.saturating_sub(1)
        } else {
            self.j
        };
        mock_predict(prompt, frames, &self.skeleton, self.precision).map_err(|e| ProviderError::Fatal(e.to_string()))
    }
}

impl ChatProvider for MockProvider {
    fn kind(&self) -> ProviderKind {
        ProviderKind::Mock
    }

    fn model_name(&self) -> String {
        "constant-velocity-mock".into()
    }

    fn reply(&mut self, history: &[ChatTurn]) -> Result<String, ProviderError> {
        let turn = history
            .last()
            .ok_or_else(|| ProviderError::Fatal("empty history".into()))?;
        let pick = (self.settings.seed as usize).wrapping_add(history.len() / 2);
        match turn.tag {
            TurnTag::Setup => Ok(ACKNOWLEDGEMENTS[pick % ACKNOWLEDGEMENTS.len()].into()),
            TurnTag::PracticeAnswerKey => Ok(REVIEWS[pick % REVIEWS.len()].into()),
            TurnTag::PracticeQuestion => {
                let answer = mock_predict(&turn.text, self.j, &self.skeleton, self.precision)
                    .map_err(|e| ProviderError::Fatal(e.to_string()))?;
                Ok(format!("{answer}\nFinished"))
            }
            TurnTag::PredictionQuery => self.predict(&turn.text),
            TurnTag::Repair => {
                let query = history
                    .iter()
                    .rev()
                    .find(|t| t.tag == TurnTag::PredictionQuery)
                    .ok_or_else(|| ProviderError::Fatal("repair without a prediction query".into()))?;
                let text = query.text.clone();
                self.predict(&text)
            }
            TurnTag::Response => Err(ProviderError::Fatal("assistant turn sent as a user message".into())),
        }
    }
}
