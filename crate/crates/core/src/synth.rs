//! Seeded synthetic motion for tests and the shipped demo dataset.
//!
//! Linear samples move every joint by a whole number of millimetres per
//! frame from integer start positions, so they render exactly at any
//! precision and a constant-velocity predictor reproduces them exactly.
//! Swing samples add periodic limb motion and are rounded to 0.1 mm.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{write_samples, MotionSample, MotionSequence, Pose};
use crate::error::DataError;
use crate::skeleton::{BodyPart, SkeletonSpec};

/// Window lengths and frame rate of generated samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shape {
    pub l_frames: usize,
    pub j_frames: usize,
    pub fps: f64,
}

fn bone(part: Option<BodyPart>) -> [f64; 3] {
    match part {
        Some(BodyPart::Trunk) | None => [0.0, 0.0, 160.0],
        Some(BodyPart::LeftArm) => [140.0, 0.0, -40.0],
        Some(BodyPart::RightArm) => [-140.0, 0.0, -40.0],
        Some(BodyPart::LeftLeg) => [70.0, 0.0, -220.0],
        Some(BodyPart::RightLeg) => [-70.0, 0.0, -220.0],
    }
}

fn part_of(skeleton: &SkeletonSpec, joint: usize) -> Option<BodyPart> {
    BodyPart::ALL.into_iter().find(|&p| skeleton.part(p).contains(&joint))
}

/// Integer rest pose: the root at 900 mm height, every other joint offset
/// from its parent along a direction set by its body part.
pub fn rest_pose(skeleton: &SkeletonSpec) -> Vec<[f64; 3]> {
    let mut pos = vec![[0.0; 3]; skeleton.joint_count()];
    for &j in skeleton.traversal() {
        pos[j] = match skeleton.parent(j) {
            None => [0.0, 0.0, 900.0],
            Some(p) => {
                let b = bone(part_of(skeleton, j));
                [pos[p][0] + b[0], pos[p][1] + b[1], pos[p][2] + b[2]]
            }
        };
    }
    pos
}

fn split(id: &str, action: &str, frames: Vec<Vec<[f64; 3]>>, shape: Shape) -> MotionSample {
    let mut poses: Vec<Pose> = frames
        .into_iter()
        .map(|f| Pose::new(f).expect("generated coordinates are finite"))
        .collect();
    let future = poses.split_off(shape.l_frames);
    MotionSample::new(
        id,
        action,
        MotionSequence::new(poses, shape.fps).expect("non-empty observed window"),
        MotionSequence::new(future, shape.fps).expect("non-empty future window"),
    )
    .expect("windows share a skeleton")
}

/// Whole-body drift plus a per-joint drift, all in integer mm per frame.
pub fn linear_sample(
    id: &str,
    action: &str,
    skeleton: &SkeletonSpec,
    shape: Shape,
    rng: &mut impl Rng,
) -> MotionSample {
    let rest = rest_pose(skeleton);
    let body: [f64; 3] = [rng.gen_range(-6..=6) as f64, rng.gen_range(-6..=6) as f64, 0.0];
    let start: [f64; 3] = [rng.gen_range(-500..=500) as f64, rng.gen_range(-500..=500) as f64, 0.0];
    let drift: Vec<[f64; 3]> = rest
        .iter()
        .map(|_| {
            [
                rng.gen_range(-2..=2) as f64,
                rng.gen_range(-2..=2) as f64,
                rng.gen_range(-1..=1) as f64,
            ]
        })
        .collect();
    let frames = (0..shape.l_frames + shape.j_frames)
        .map(|f| {
            let t = f as f64;
            rest.iter()
                .zip(&drift)
                .map(|(r, d)| {
                    [
                        r[0] + start[0] + t * (body[0] + d[0]),
                        r[1] + start[1] + t * (body[1] + d[1]),
                        r[2] + start[2] + t * (body[2] + d[2]),
                    ]
                })
                .collect()
        })
        .collect();
    split(id, action, frames, shape)
}

/// Limbs swing back and forth with amplitude growing away from the root.
pub fn swing_sample(id: &str, action: &str, skeleton: &SkeletonSpec, shape: Shape, rng: &mut impl Rng) -> MotionSample {
    let rest = rest_pose(skeleton);
    let hz: f64 = rng.gen_range(0.5..2.0);
    let amplitude: f64 = rng.gen_range(20.0..80.0);
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut depth = vec![0usize; skeleton.joint_count()];
    for &j in skeleton.traversal() {
        depth[j] = skeleton.parent(j).map_or(0, |p| depth[p] + 1);
    }
    let sign: Vec<f64> = (0..skeleton.joint_count())
        .map(|j| match part_of(skeleton, j) {
            Some(BodyPart::LeftArm) | Some(BodyPart::RightLeg) => 1.0,
            Some(BodyPart::RightArm) | Some(BodyPart::LeftLeg) => -1.0,
            _ => 0.0,
        })
        .collect();
    let round = |v: f64| (v * 10.0).round() / 10.0;
    let frames = (0..shape.l_frames + shape.j_frames)
        .map(|f| {
            let s = (std::f64::consts::TAU * hz * f as f64 / shape.fps + phase).sin();
            rest.iter()
                .enumerate()
                .map(|(j, r)| {
                    let a = amplitude * depth[j] as f64 / 3.0 * sign[j] * s;
                    [round(r[0]), round(r[1] + a), round(r[2] + 0.2 * a.abs())]
                })
                .collect()
        })
        .collect();
    split(id, action, frames, shape)
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub base: Vec<MotionSample>,
    pub support: BTreeMap<String, Vec<MotionSample>>,
    pub test: BTreeMap<String, Vec<MotionSample>>,
}

/// Action names of [`generate`]: `walking` moves linearly, `waving` swings.
pub const LINEAR_ACTION: &str = "walking";
pub const SWING_ACTION: &str = "waving";

/// Base set of `base` samples alternating linear and swing motion, plus
/// `support` and `test` samples for each of the two actions.
pub fn generate(
    skeleton: &SkeletonSpec,
    shape: Shape,
    base: usize,
    support: usize,
    test: usize,
    seed: u64,
) -> SyntheticDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base_samples = (0..base)
        .map(|i| {
            let id = format!("base_{i:03}");
            if i % 2 == 0 {
                linear_sample(&id, "base_linear", skeleton, shape, &mut rng)
            } else {
                swing_sample(&id, "base_swing", skeleton, shape, &mut rng)
            }
        })
        .collect();
    let mut support_sets = BTreeMap::new();
    let mut test_sets = BTreeMap::new();
    for action in [LINEAR_ACTION, SWING_ACTION] {
        let mut make = |kind: &str, count: usize| -> Vec<MotionSample> {
            (0..count)
                .map(|i| {
                    let id = format!("{action}_{kind}_{i:03}");
                    if action == LINEAR_ACTION {
                        linear_sample(&id, action, skeleton, shape, &mut rng)
                    } else {
                        swing_sample(&id, action, skeleton, shape, &mut rng)
                    }
                })
                .collect()
        };
        support_sets.insert(action.to_string(), make("support", support));
        test_sets.insert(action.to_string(), make("test", test));
    }
    SyntheticDataset {
        base: base_samples,
        support: support_sets,
        test: test_sets,
    }
}

/// Writes `base.jsonl`, `support/<action>.jsonl` and `test/<action>.jsonl`.
pub fn write_dataset(dir: &Path, data: &SyntheticDataset) -> Result<(), DataError> {
    for sub in ["support", "test"] {
        let d = dir.join(sub);
        std::fs::create_dir_all(&d).map_err(|e| DataError::io(&d, e))?;
    }
    write_samples(dir.join("base.jsonl"), &data.base)?;
    for (action, samples) in &data.support {
        write_samples(dir.join("support").join(format!("{action}.jsonl")), samples)?;
    }
    for (action, samples) in &data.test {
        write_samples(dir.join("test").join(format!("{action}.jsonl")), samples)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const SHAPE: Shape = Shape {
        l_frames: 10,
        j_frames: 5,
        fps: 25.0,
    };

    #[test]
    fn rest_pose_is_integer_and_root_first() {
        let sk = fixtures::h36m_skeleton();
        let rest = rest_pose(&sk);
        assert_eq!(rest[sk.root()], [0.0, 0.0, 900.0]);
        assert!(rest.iter().flatten().all(|v| v.fract() == 0.0));
    }

    #[test]
    fn linear_motion_has_constant_integer_velocity() {
        let sk = fixtures::h36m_skeleton();
        let s = linear_sample("x", "a", &sk, SHAPE, &mut ChaCha8Rng::seed_from_u64(1));
        let frames: Vec<&Pose> = s.all_frames().collect();
        for w in frames.windows(3) {
            for j in 0..sk.joint_count() {
                for c in 0..3 {
                    let (a, b, d) = (w[0].joint(j)[c], w[1].joint(j)[c], w[2].joint(j)[c]);
                    assert_eq!(b - a, d - b);
                    assert_eq!(a.fract(), 0.0);
                }
            }
        }
    }

    #[test]
    fn generation_is_seeded() {
        let sk = fixtures::h36m_skeleton();
        let a = generate(&sk, SHAPE, 4, 2, 3, 7);
        let b = generate(&sk, SHAPE, 4, 2, 3, 7);
        assert_eq!(a.base, b.base);
        assert_eq!(a.test[LINEAR_ACTION], b.test[LINEAR_ACTION]);
        assert_eq!(a.support[SWING_ACTION].len(), 2);
        assert_ne!(a.base, generate(&sk, SHAPE, 4, 2, 3, 8).base);
    }
}
