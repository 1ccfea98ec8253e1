use std::fmt;

use serde::{Deserialize, Serialize};

use super::render::{check_precision, render_frames, render_sequence, rendered_indices};
use super::templates::{self, fill_block};
use super::{build_prediction_prompt, PromptError};
use crate::data::{MotionSample, MotionSequence};
use crate::skeleton::SkeletonSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sender {
    User,
    Assistant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnTag {
    Setup,
    PracticeQuestion,
    PracticeAnswerKey,
    PredictionQuery,
    /// Follow-up asking the model to re-emit an unparseable prediction.
    Repair,
    Response,
}

impl fmt::Display for TurnTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("tag serializes");
        f.write_str(s.as_str().expect("tag is a string"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatTurn {
    pub sender: Sender,
    pub text: String,
    pub tag: TurnTag,
}

impl ChatTurn {
    pub fn user(tag: TurnTag, text: impl Into<String>) -> Self {
        ChatTurn {
            sender: Sender::User,
            text: text.into(),
            tag,
        }
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        ChatTurn {
            sender: Sender::Assistant,
            text: text.into(),
            tag: TurnTag::Response,
        }
    }
}

/// Shape of a demonstration script.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptLayout {
    /// Pre-selected base samples.
    pub p: usize,
    /// Support samples of the target action.
    pub n: usize,
    pub l_frames: usize,
    pub j_frames: usize,
    pub precision: usize,
    pub stride: usize,
}

/// User turns of one practice-exam session, in sending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemonstrationScript {
    pub turns: Vec<ChatTurn>,
    pub sample_order: Vec<String>,
    pub l_frames: usize,
    pub j_frames: usize,
    pub precision: usize,
    pub fps: f64,
}

impl DemonstrationScript {
    /// One JSON object per turn.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for t in &self.turns {
            out.push_str(&serde_json::to_string(t).expect("turn serializes"));
            out.push('\n');
        }
        out
    }

    pub fn prediction_query(&self) -> &ChatTurn {
        self.turns.last().expect("script has a final query")
    }
}

fn check_sample(s: &MotionSample, layout: &ScriptLayout, skeleton: &SkeletonSpec) -> Result<(), PromptError> {
    if s.l_frames() != layout.l_frames || s.j_frames() != layout.j_frames {
        return Err(PromptError::Shape(format!(
            "sample {:?} has {}+{} frames, expected {}+{}",
            s.id,
            s.l_frames(),
            s.j_frames(),
            layout.l_frames,
            layout.j_frames
        )));
    }
    if s.observed.joint_count() != skeleton.joint_count() {
        return Err(PromptError::Shape(format!(
            "sample {:?} has {} joints, skeleton has {}",
            s.id,
            s.observed.joint_count(),
            skeleton.joint_count()
        )));
    }
    Ok(())
}

/// Setup turn, then for each pre-selected and then each support sample a
/// practice question (observed frames) and its answer key (future frames),
/// then the prediction query for the test sequence.
pub fn build_practice_script(
    preselected: &[MotionSample],
    support: &[MotionSample],
    test_observed: &MotionSequence,
    skeleton: &SkeletonSpec,
    layout: &ScriptLayout,
) -> Result<DemonstrationScript, PromptError> {
    check_precision(layout.precision)?;
    if layout.stride == 0 {
        return Err(PromptError::BadStride);
    }
    if preselected.len() != layout.p || support.len() != layout.n {
        return Err(PromptError::WrongCounts {
            p: preselected.len(),
            n: support.len(),
            expected_p: layout.p,
            expected_n: layout.n,
        });
    }
    let shown = rendered_indices(layout.l_frames, layout.stride);
    let mut turns = vec![ChatTurn::user(TurnTag::Setup, templates::SETUP)];
    let mut order = Vec::with_capacity(layout.p + layout.n);
    for sample in preselected.iter().chain(support) {
        check_sample(sample, layout, skeleton)?;
        let observed = render_frames(&sample.observed, &shown, 1, skeleton, layout.precision)?;
        let future = render_sequence(&sample.future, layout.l_frames + 1, skeleton, layout.precision)?;
        turns.push(ChatTurn::user(
            TurnTag::PracticeQuestion,
            fill_block(templates::PRACTICE_QUESTION, templates::OBSERVED_SLOT, &observed),
        ));
        turns.push(ChatTurn::user(
            TurnTag::PracticeAnswerKey,
            fill_block(templates::ANSWER_KEY, templates::FUTURE_SLOT, &future),
        ));
        order.push(sample.id.clone());
    }
    let query = build_prediction_prompt(
        test_observed,
        layout.l_frames,
        layout.j_frames,
        skeleton,
        layout.precision,
        layout.stride,
    )?;
    turns.push(ChatTurn::user(TurnTag::PredictionQuery, query));
    Ok(DemonstrationScript {
        turns,
        sample_order: order,
        l_frames: layout.l_frames,
        j_frames: layout.j_frames,
        precision: layout.precision,
        fps: test_observed.fps(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Pose;
    use crate::fixtures;

    fn sample(id: &str, l: usize, j: usize) -> MotionSample {
        let seq = |n: usize, off: usize| {
            let poses = (0..n)
                .map(|f| Pose::new((0..5).map(|k| [(f + off) as f64, k as f64, 0.0]).collect()).unwrap())
                .collect();
            MotionSequence::new(poses, 25.0).unwrap()
        };
        MotionSample::new(id, "walking", seq(l, 0), seq(j, l)).unwrap()
    }

    fn layout(p: usize, n: usize, l: usize, j: usize) -> ScriptLayout {
        ScriptLayout {
            p,
            n,
            l_frames: l,
            j_frames: j,
            precision: 1,
            stride: 1,
        }
    }

    #[test]
    fn default_setting_has_32_turns() {
        let sk = fixtures::toy_skeleton();
        let base: Vec<_> = (0..10).map(|i| sample(&format!("b{i}"), 4, 2)).collect();
        let support: Vec<_> = (0..5).map(|i| sample(&format!("s{i}"), 4, 2)).collect();
        let test = sample("t", 4, 2);
        let s = build_practice_script(&base, &support, &test.observed, &sk, &layout(10, 5, 4, 2)).unwrap();
        assert_eq!(s.turns.len(), 32);
        assert_eq!(s.sample_order.len(), 15);
        assert_eq!(s.sample_order[0], "b0");
        assert_eq!(s.sample_order[14], "s4");
        assert_eq!(s.turns[0].tag, TurnTag::Setup);
        assert_eq!(s.turns[31].tag, TurnTag::PredictionQuery);
        for pair in s.turns[1..31].chunks(2) {
            assert_eq!(pair[0].tag, TurnTag::PracticeQuestion);
            assert_eq!(pair[1].tag, TurnTag::PracticeAnswerKey);
        }
    }

    #[test]
    fn smallest_script() {
        let sk = fixtures::toy_skeleton();
        let support = vec![sample("s", 2, 2)];
        let s = build_practice_script(&[], &support, &support[0].observed, &sk, &layout(0, 1, 2, 2)).unwrap();
        assert_eq!(s.turns.len(), 4);
        assert_eq!(s.to_jsonl().lines().count(), 4);
    }

    #[test]
    fn observed_slot_holds_both_frames() {
        let sk = fixtures::toy_skeleton();
        let support = vec![sample("s", 2, 3)];
        let s = build_practice_script(&[], &support, &support[0].observed, &sk, &layout(0, 1, 2, 3)).unwrap();
        let q = &s.turns[1].text;
        let (prefix, suffix) = templates::PRACTICE_QUESTION.split_once("[observed]").unwrap();
        assert!(q.starts_with(prefix) && q.ends_with(suffix));
        let inner = &q[prefix.len()..q.len() - suffix.len()];
        assert!(inner.contains("Frame 1:\nroot: (0.0, 0.0, 0.0)"));
        assert!(inner.contains("Frame 2:\nroot: (1.0, 0.0, 0.0)"));
        assert!(!inner.contains("Frame 3:"));
        // Answer keys continue the numbering after the observed window.
        let a = &s.turns[2].text;
        assert!(a.contains("Frame 3:\nroot: (2.0, 0.0, 0.0)"));
        assert!(a.contains("Frame 5:"));
    }

    #[test]
    fn wrong_counts_rejected() {
        let sk = fixtures::toy_skeleton();
        let support = vec![sample("s", 2, 2)];
        let err = build_practice_script(&[], &support, &support[0].observed, &sk, &layout(1, 1, 2, 2)).unwrap_err();
        assert!(matches!(
            err,
            PromptError::WrongCounts {
                p: 0,
                expected_p: 1,
                ..
            }
        ));
    }

    #[test]
    fn mismatched_sample_rejected() {
        let sk = fixtures::toy_skeleton();
        let support = vec![sample("s", 3, 2)];
        let test = sample("t", 2, 2);
        assert!(matches!(
            build_practice_script(&[], &support, &test.observed, &sk, &layout(0, 1, 2, 2)),
            Err(PromptError::Shape(_))
        ));
    }
}
