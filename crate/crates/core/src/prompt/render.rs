use crate::data::{MotionSequence, Pose};
use crate::skeleton::SkeletonSpec;

use super::PromptError;

pub const MAX_PRECISION: usize = 6;

/// Fixed-point text with ties rounded to even; negative zero prints unsigned.
pub fn format_number(value: f64, precision: usize) -> String {
    let s = format!("{value:.precision$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub(crate) fn check_precision(precision: usize) -> Result<(), PromptError> {
    if precision > MAX_PRECISION {
        return Err(PromptError::BadPrecision(precision));
    }
    Ok(())
}

/// One `<joint>: (<x>, <y>, <z>)` line per joint in central-to-peripheral order.
pub fn format_pose(pose: &Pose, skeleton: &SkeletonSpec, precision: usize) -> Result<String, PromptError> {
    check_precision(precision)?;
    pose.check_skeleton(skeleton)?;
    let lines: Vec<String> = skeleton
        .traversal()
        .iter()
        .map(|&j| {
            let [x, y, z] = pose.joint(j);
            format!(
                "{}: ({}, {}, {})",
                skeleton.joint_name(j),
                format_number(x, precision),
                format_number(y, precision),
                format_number(z, precision)
            )
        })
        .collect();
    Ok(lines.join("\n"))
}

/// 0-based indices of the frames shown for a window of `len` frames: every
/// `stride`-th frame counted back from the last, so the last is always shown.
pub fn rendered_indices(len: usize, stride: usize) -> Vec<usize> {
    assert!(stride >= 1, "stride must be positive");
    let mut idx: Vec<usize> = (0..len).rev().step_by(stride).collect();
    idx.reverse();
    idx
}

/// Renders selected frames as `Frame <k>:` blocks; frame `i` is labelled
/// `first_label + i`.
pub(crate) fn render_frames(
    seq: &MotionSequence,
    indices: &[usize],
    first_label: usize,
    skeleton: &SkeletonSpec,
    precision: usize,
) -> Result<String, PromptError> {
    let mut blocks = Vec::with_capacity(indices.len());
    for &i in indices {
        blocks.push(format!(
            "Frame {}:\n{}",
            first_label + i,
            format_pose(&seq.frames()[i], skeleton, precision)?
        ));
    }
    Ok(blocks.join("\n"))
}

/// Every frame of a sequence, numbered from `first_label`.
pub fn render_sequence(
    seq: &MotionSequence,
    first_label: usize,
    skeleton: &SkeletonSpec,
    precision: usize,
) -> Result<String, PromptError> {
    check_precision(precision)?;
    let all: Vec<usize> = (0..seq.frame_count()).collect();
    render_frames(seq, &all, first_label, skeleton, precision)
}

/// Observed frames at the given stride (numbered 1..=L), followed by the
/// prediction command for the shown frame count and `j` future frames.
pub fn build_prediction_prompt(
    observed: &MotionSequence,
    l: usize,
    j: usize,
    skeleton: &SkeletonSpec,
    precision: usize,
    stride: usize,
) -> Result<String, PromptError> {
    check_precision(precision)?;
    if stride == 0 {
        return Err(PromptError::BadStride);
    }
    if observed.frame_count() != l {
        return Err(PromptError::Shape(format!(
            "observed sequence has {} frames, expected {l}",
            observed.frame_count()
        )));
    }
    if j == 0 {
        return Err(PromptError::Shape("future length must be positive".into()));
    }
    let shown = rendered_indices(l, stride);
    let frames = render_frames(observed, &shown, 1, skeleton, precision)?;
    Ok(format!(
        "{frames}\n\n{}",
        super::templates::prediction_command(shown.len(), j)
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn toy_seq(frames: usize) -> MotionSequence {
        let poses = (0..frames)
            .map(|f| Pose::new((0..5).map(|j| [f as f64, j as f64, 0.5]).collect()).unwrap())
            .collect();
        MotionSequence::new(poses, 25.0).unwrap()
    }

    #[test]
    fn half_even_rounding() {
        let sk = fixtures::chain_skeleton();
        let pose = Pose::new(vec![[1.25, 0.0, -3.456], [0.0; 3], [0.0; 3]]).unwrap();
        let text = format_pose(&pose, &sk, 1).unwrap();
        assert_eq!(text.lines().next().unwrap(), "root: (1.2, 0.0, -3.5)");
    }

    #[test]
    fn precision_zero() {
        let sk = fixtures::chain_skeleton();
        let pose = Pose::new(vec![[2.0, 3.0, 4.0]; 3]).unwrap();
        assert_eq!(
            format_pose(&pose, &sk, 0).unwrap().lines().last().unwrap(),
            "b: (2, 3, 4)"
        );
    }

    #[test]
    fn negative_zero_is_unsigned() {
        assert_eq!(format_number(-0.04, 1), "0.0");
        assert_eq!(format_number(-0.0, 0), "0");
        assert_eq!(format_number(-0.06, 1), "-0.1");
    }

    #[test]
    fn precision_bounds() {
        let sk = fixtures::chain_skeleton();
        let pose = Pose::new(vec![[0.0; 3]; 3]).unwrap();
        assert_eq!(format_pose(&pose, &sk, 7), Err(PromptError::BadPrecision(7)));
    }

    #[test]
    fn h36m_pose_lines_follow_traversal() {
        let sk = fixtures::h36m_skeleton();
        let pose = Pose::new((0..17).map(|j| [j as f64, 0.0, 0.0]).collect()).unwrap();
        let text = format_pose(&pose, &sk, 1).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 17);
        assert!(lines[0].starts_with("pelvis: "));
        let order = crate::data::kinematic_order(&pose, &sk).unwrap();
        for (line, (name, _)) in lines.iter().zip(order) {
            assert!(line.starts_with(&format!("{name}: ")));
        }
    }

    #[test]
    fn stride_indices() {
        assert_eq!(rendered_indices(5, 1), vec![0, 1, 2, 3, 4]);
        let idx = rendered_indices(50, 2);
        assert_eq!(idx.len(), 25);
        assert_eq!(*idx.last().unwrap(), 49);
        assert_eq!(rendered_indices(50, 50), vec![49]);
        assert_eq!(rendered_indices(5, 2), vec![0, 2, 4]);
    }

    #[test]
    fn prompt_counts_match_figure_setting() {
        let sk = fixtures::toy_skeleton();
        let text = build_prediction_prompt(&toy_seq(5), 5, 5, &sk, 1, 1).unwrap();
        assert!(text.contains("observed in the past 5 frames"));
        assert!(text.contains("following 5 frames"));
        assert!(text.starts_with("Frame 1:\nroot: (0.0, 0.0, 0.5)"));
    }

    #[test]
    fn strided_prompt_shows_last_frame() {
        let sk = fixtures::toy_skeleton();
        let text = build_prediction_prompt(&toy_seq(50), 50, 25, &sk, 1, 2).unwrap();
        assert_eq!(text.matches("Frame ").count(), 25);
        assert!(text.contains("Frame 50:\n"));
        assert!(!text.contains("Frame 49:"));
        assert!(text.contains("past 25 frames"));
        let single = build_prediction_prompt(&toy_seq(50), 50, 25, &sk, 1, 50).unwrap();
        assert_eq!(single.matches("Frame ").count(), 1);
        assert!(single.contains("past 1 frames"));
    }

    #[test]
    fn prompt_rejects_bad_input() {
        let sk = fixtures::toy_skeleton();
        assert_eq!(
            build_prediction_prompt(&toy_seq(5), 5, 5, &sk, 1, 0),
            Err(PromptError::BadStride)
        );
        assert!(matches!(
            build_prediction_prompt(&toy_seq(4), 5, 5, &sk, 1, 1),
            Err(PromptError::Shape(_))
        ));
    }
}
