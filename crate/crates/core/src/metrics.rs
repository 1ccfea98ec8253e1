//! Sample-to-sample distance for the similarity graph, and MPJPE evaluation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{MotionSample, MotionSequence};
use crate::error::MetricsError;
use crate::skeleton::{BodyPart, SkeletonSpec};

/// Evaluation horizons in milliseconds, 80ms through 1000ms.
pub const DEFAULT_HORIZONS_MS: [u32; 10] = [80, 160, 240, 320, 400, 560, 640, 720, 880, 1000];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistanceOptions {
    /// Compare only the observed windows instead of observed ⧺ future.
    pub observed_only: bool,
    /// Divide every norm by the square root of its coordinate count.
    pub per_dimension: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDistance {
    pub global: f64,
    pub per_part: BTreeMap<BodyPart, f64>,
    pub combined: f64,
}

fn check_shapes(a: &MotionSample, b: &MotionSample, skeleton: &SkeletonSpec) -> Result<(), MetricsError> {
    let joints = skeleton.joint_count();
    for s in [a, b] {
        if s.observed.joint_count() != joints || s.future.joint_count() != joints {
            return Err(MetricsError::ShapeMismatch(format!(
                "sample {:?} has {} joints, skeleton has {joints}",
                s.id,
                s.observed.joint_count()
            )));
        }
    }
    if a.l_frames() != b.l_frames() || a.j_frames() != b.j_frames() {
        return Err(MetricsError::ShapeMismatch(format!(
            "samples {:?} ({}+{} frames) and {:?} ({}+{} frames) differ in length",
            a.id,
            a.l_frames(),
            a.j_frames(),
            b.id,
            b.l_frames(),
            b.j_frames()
        )));
    }
    Ok(())
}

pub fn sample_distance(
    a: &MotionSample,
    b: &MotionSample,
    skeleton: &SkeletonSpec,
) -> Result<SampleDistance, MetricsError> {
    sample_distance_with(a, b, skeleton, DistanceOptions::default())
}

/// Average of the global L2 distance and the five per-part L2 distances.
pub fn sample_distance_with(
    a: &MotionSample,
    b: &MotionSample,
    skeleton: &SkeletonSpec,
    options: DistanceOptions,
) -> Result<SampleDistance, MetricsError> {
    check_shapes(a, b, skeleton)?;

    // Squared differences per joint, summed over every compared frame.
    let mut joint_sq = vec![0.0f64; skeleton.joint_count()];
    let frames: Box<dyn Iterator<Item = _>> = if options.observed_only {
        Box::new(a.observed.frames().iter().zip(b.observed.frames()))
    } else {
        Box::new(a.all_frames().zip(b.all_frames()))
    };
    let mut frame_count = 0usize;
    for (fa, fb) in frames {
        frame_count += 1;
        for (acc, (pa, pb)) in joint_sq.iter_mut().zip(fa.coords().iter().zip(fb.coords())) {
            *acc += (0..3).map(|k| (pa[k] - pb[k]).powi(2)).sum::<f64>();
        }
    }

    let norm = |joints: &mut dyn Iterator<Item = usize>| -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for j in joints {
            sum += joint_sq[j];
            count += 1;
        }
        if options.per_dimension {
            if count == 0 {
                0.0
            } else {
                (sum / (3 * count * frame_count) as f64).sqrt()
            }
        } else {
            sum.sqrt()
        }
    };

    let global = norm(&mut (0..skeleton.joint_count()));
    let per_part: BTreeMap<BodyPart, f64> = BodyPart::ALL
        .into_iter()
        .map(|p| (p, norm(&mut skeleton.part(p).iter().copied())))
        .collect();
    let combined = (global + per_part.values().sum::<f64>()) / 6.0;
    Ok(SampleDistance {
        global,
        per_part,
        combined,
    })
}

/// Frame number (1-based) for a horizon, rounding half up.
pub fn horizon_frame(horizon_ms: u32, fps: f64) -> i64 {
    (horizon_ms as f64 * fps / 1000.0 + 0.5).floor() as i64
}

/// Whether a horizon lands exactly on a frame at this frame rate.
pub fn horizon_is_exact(horizon_ms: u32, fps: f64) -> bool {
    let exact = horizon_ms as f64 * fps / 1000.0;
    (exact - exact.round()).abs() < 1e-9
}

fn check_pair(pred: &MotionSequence, gt: &MotionSequence) -> Result<(), MetricsError> {
    if pred.frame_count() != gt.frame_count() || pred.joint_count() != gt.joint_count() {
        return Err(MetricsError::ShapeMismatch(format!(
            "prediction has {}x{} (frames x joints), ground truth {}x{}",
            pred.frame_count(),
            pred.joint_count(),
            gt.frame_count(),
            gt.joint_count()
        )));
    }
    if pred.fps() != gt.fps() {
        return Err(MetricsError::ShapeMismatch(format!(
            "prediction fps {} differs from ground truth fps {}",
            pred.fps(),
            gt.fps()
        )));
    }
    Ok(())
}

/// Mean per-joint position error at the frame reached after `horizon_ms`.
pub fn mpjpe_at(pred: &MotionSequence, gt: &MotionSequence, horizon_ms: u32) -> Result<f64, MetricsError> {
    check_pair(pred, gt)?;
    let frame = horizon_frame(horizon_ms, gt.fps());
    if frame < 1 || frame as usize > gt.frame_count() {
        return Err(MetricsError::HorizonOutOfRange {
            horizon_ms,
            frame,
            frames: gt.frame_count(),
        });
    }
    let k = frame as usize - 1;
    let (p, g) = (&pred.frames()[k], &gt.frames()[k]);
    let total: f64 = p
        .coords()
        .iter()
        .zip(g.coords())
        .map(|(a, b)| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt())
        .sum();
    Ok(total / p.joint_count() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpjpeReport {
    pub per_horizon: BTreeMap<u32, f64>,
    pub average: f64,
}

impl MpjpeReport {
    pub fn from_per_horizon(per_horizon: BTreeMap<u32, f64>) -> Result<Self, MetricsError> {
        if per_horizon.is_empty() {
            return Err(MetricsError::EmptyHorizons);
        }
        let average = per_horizon.values().sum::<f64>() / per_horizon.len() as f64;
        Ok(MpjpeReport { per_horizon, average })
    }

    /// Horizon-wise mean of several reports over the same horizons.
    pub fn mean_of(reports: &[MpjpeReport]) -> Result<Self, MetricsError> {
        let first = reports.first().ok_or(MetricsError::EmptyHorizons)?;
        let mut sums: BTreeMap<u32, f64> = first.per_horizon.keys().map(|&h| (h, 0.0)).collect();
        for r in reports {
            if r.per_horizon.len() != sums.len() || !r.per_horizon.keys().all(|h| sums.contains_key(h)) {
                return Err(MetricsError::ShapeMismatch("reports cover different horizons".into()));
            }
            for (h, v) in &r.per_horizon {
                *sums.get_mut(h).expect("checked above") += v;
            }
        }
        let n = reports.len() as f64;
        Self::from_per_horizon(sums.into_iter().map(|(h, s)| (h, s / n)).collect())
    }

    /// `horizon_ms,error_mm` rows, one per horizon.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("horizon_ms,error_mm\n");
        for (h, e) in &self.per_horizon {
            out.push_str(&format!("{h},{e}\n"));
        }
        out
    }
}

pub fn mpjpe_table(pred: &MotionSequence, gt: &MotionSequence, horizons: &[u32]) -> Result<MpjpeReport, MetricsError> {
    if horizons.is_empty() {
        return Err(MetricsError::EmptyHorizons);
    }
    let mut per_horizon = BTreeMap::new();
    for &h in horizons {
        per_horizon.insert(h, mpjpe_at(pred, gt, h)?);
    }
    MpjpeReport::from_per_horizon(per_horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Pose;
    use crate::fixtures;

    fn seq(frames: Vec<Vec<[f64; 3]>>) -> MotionSequence {
        MotionSequence::new(frames.into_iter().map(|f| Pose::new(f).unwrap()).collect(), 25.0).unwrap()
    }

    fn ramp(frames: usize, joints: usize) -> MotionSequence {
        seq((0..frames)
            .map(|f| (0..joints).map(|j| [f as f64 * 3.0, j as f64, -(f as f64)]).collect())
            .collect())
    }

    #[test]
    fn toy_distance_matches_hand_value() {
        let sk = fixtures::toy_skeleton();
        let pose = vec![
            [1.0, 2.0, 3.0],
            [4.0, 5.0, 6.0],
            [7.0, 8.0, 9.0],
            [1.5, 2.5, 3.5],
            [0.0, 0.0, 0.0],
        ];
        let a = MotionSample::new("a", "x", seq(vec![pose.clone()]), seq(vec![pose.clone()])).unwrap();
        let shifted: Vec<[f64; 3]> = pose.iter().map(|c| [c[0] + 1.0, c[1] + 1.0, c[2] + 1.0]).collect();
        // Only the observed frame differs.
        let b = MotionSample::new("b", "x", seq(vec![shifted]), seq(vec![pose])).unwrap();
        let d = sample_distance(&a, &b, &sk).unwrap();
        let observed_only = DistanceOptions {
            observed_only: true,
            ..Default::default()
        };
        assert_eq!(sample_distance_with(&a, &b, &sk, observed_only).unwrap(), d);
        assert!((d.global - 15f64.sqrt()).abs() < 1e-12);
        for v in d.per_part.values() {
            assert!((v - 3f64.sqrt()).abs() < 1e-12);
        }
        let expected = (15f64.sqrt() + 5.0 * 3f64.sqrt()) / 6.0;
        assert!((d.combined - expected).abs() < 1e-9);
        assert!((d.combined - 2.08887).abs() < 1e-5);
    }

    #[test]
    fn identical_samples_are_zero() {
        let sk = fixtures::toy_skeleton();
        let s = MotionSample::new("a", "x", ramp(3, 5), ramp(2, 5)).unwrap();
        let d = sample_distance(&s, &s, &sk).unwrap();
        assert_eq!(d.combined, 0.0);
        assert!(d.per_part.values().all(|&v| v == 0.0));
    }

    #[test]
    fn per_dimension_option_rescales() {
        let sk = fixtures::toy_skeleton();
        let a = MotionSample::new("a", "x", ramp(2, 5), ramp(2, 5)).unwrap();
        let b = MotionSample::new(
            "b",
            "x",
            ramp(2, 5).translated([2.0, 0.0, 0.0]),
            ramp(2, 5).translated([2.0, 0.0, 0.0]),
        )
        .unwrap();
        let opts = DistanceOptions {
            per_dimension: true,
            ..Default::default()
        };
        let d = sample_distance_with(&a, &b, &sk, opts).unwrap();
        // RMS over coordinates: one third of the coordinates differ by 2.
        let rms = (4.0f64 / 3.0).sqrt();
        assert!((d.global - rms).abs() < 1e-12);
        assert!((d.combined - rms).abs() < 1e-12);
    }

    #[test]
    fn distance_rejects_length_mismatch() {
        let sk = fixtures::toy_skeleton();
        let a = MotionSample::new("a", "x", ramp(3, 5), ramp(2, 5)).unwrap();
        let b = MotionSample::new("b", "x", ramp(2, 5), ramp(2, 5)).unwrap();
        assert!(matches!(
            sample_distance(&a, &b, &sk),
            Err(MetricsError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn horizon_mapping_at_25fps() {
        assert_eq!(horizon_frame(80, 25.0), 2);
        assert_eq!(horizon_frame(1000, 25.0), 25);
        assert_eq!(horizon_frame(20, 25.0), 1); // 0.5 rounds up
        assert!(DEFAULT_HORIZONS_MS.iter().all(|&h| horizon_is_exact(h, 25.0)));
        assert!(!horizon_is_exact(50, 25.0));
    }

    #[test]
    fn offset_three_four_zero_gives_five() {
        let gt = ramp(25, 17);
        let pred = gt.translated([3.0, 4.0, 0.0]);
        for h in DEFAULT_HORIZONS_MS {
            assert_eq!(mpjpe_at(&pred, &gt, h).unwrap(), 5.0);
            assert_eq!(mpjpe_at(&gt, &gt, h).unwrap(), 0.0);
        }
        let r = mpjpe_table(&pred, &gt, &DEFAULT_HORIZONS_MS).unwrap();
        assert_eq!(r.average, 5.0);
        assert!(r.per_horizon.values().all(|&v| v == 5.0));
    }

    #[test]
    fn horizon_past_end_rejected() {
        let gt = ramp(10, 2);
        assert!(matches!(
            mpjpe_at(&gt, &gt, 1000),
            Err(MetricsError::HorizonOutOfRange { frame: 25, .. })
        ));
        assert!(matches!(
            mpjpe_at(&gt, &gt, 0),
            Err(MetricsError::HorizonOutOfRange { frame: 0, .. })
        ));
        assert_eq!(mpjpe_table(&gt, &gt, &[]), Err(MetricsError::EmptyHorizons));
    }

    #[test]
    fn two_horizon_average() {
        let r = MpjpeReport::from_per_horizon([(80, 2.0), (160, 4.0)].into_iter().collect()).unwrap();
        assert_eq!(r.average, 3.0);
        assert_eq!(r.to_csv(), "horizon_ms,error_mm\n80,2\n160,4\n");
    }

    #[test]
    fn mean_of_reports() {
        let a = MpjpeReport::from_per_horizon([(80, 2.0), (160, 4.0)].into_iter().collect()).unwrap();
        let b = MpjpeReport::from_per_horizon([(80, 4.0), (160, 8.0)].into_iter().collect()).unwrap();
        let m = MpjpeReport::mean_of(&[a, b]).unwrap();
        assert_eq!(m.per_horizon[&80], 3.0);
        assert_eq!(m.average, 4.5);
    }
}
