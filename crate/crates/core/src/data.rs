//! Motion samples and their JSON-lines dataset format.
//!
//! A dataset record holds one contiguous clip. Loading splits it into the
//! observed window (first `L` frames) and the future window (next `J` frames);
//! anything after `L + J` is ignored.

use std::borrow::Cow;
use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::DataError;
use crate::skeleton::SkeletonSpec;

pub const DEFAULT_FPS: f64 = 25.0;

/// Joint positions of one frame in millimeters, in skeleton joint order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pose {
    coords: Vec<[f64; 3]>,
}

impl Pose {
    pub fn new(coords: Vec<[f64; 3]>) -> Result<Self, DataError> {
        if coords.iter().flatten().any(|v| !v.is_finite()) {
            return Err(DataError::NonFinite {
                id: String::new(),
                frame: 0,
            });
        }
        Ok(Pose { coords })
    }

    pub fn coords(&self) -> &[[f64; 3]] {
        &self.coords
    }

    pub fn joint(&self, joint: usize) -> [f64; 3] {
        self.coords[joint]
    }

    pub fn joint_count(&self) -> usize {
        self.coords.len()
    }

    pub fn translated(&self, by: [f64; 3]) -> Pose {
        Pose {
            coords: self
                .coords
                .iter()
                .map(|c| [c[0] + by[0], c[1] + by[1], c[2] + by[2]])
                .collect(),
        }
    }

    pub fn check_skeleton(&self, skeleton: &SkeletonSpec) -> Result<(), DataError> {
        if self.coords.len() != skeleton.joint_count() {
            return Err(DataError::PoseMismatch {
                found: self.coords.len(),
                expected: skeleton.joint_count(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionSequence {
    frames: Vec<Pose>,
    fps: f64,
}

impl MotionSequence {
    pub fn new(frames: Vec<Pose>, fps: f64) -> Result<Self, DataError> {
        if frames.is_empty() {
            return Err(DataError::Inconsistent("motion sequence has no frames".into()));
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(DataError::Inconsistent(format!("fps must be positive, got {fps}")));
        }
        let joints = frames[0].joint_count();
        if let Some(bad) = frames.iter().position(|f| f.joint_count() != joints) {
            return Err(DataError::Inconsistent(format!(
                "frame {} has {} joints, frame 1 has {joints}",
                bad + 1,
                frames[bad].joint_count()
            )));
        }
        Ok(MotionSequence { frames, fps })
    }

    pub fn frames(&self) -> &[Pose] {
        &self.frames
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn joint_count(&self) -> usize {
        self.frames[0].joint_count()
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn last(&self) -> &Pose {
        self.frames.last().expect("non-empty by construction")
    }

    pub fn translated(&self, by: [f64; 3]) -> MotionSequence {
        MotionSequence {
            frames: self.frames.iter().map(|f| f.translated(by)).collect(),
            fps: self.fps,
        }
    }

    /// Flat coordinate vectors, e.g. for JSON output.
    pub fn to_nested(&self) -> Vec<Vec<[f64; 3]>> {
        self.frames.iter().map(|f| f.coords.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionSample {
    pub id: String,
    pub action: String,
    pub observed: MotionSequence,
    pub future: MotionSequence,
}

impl MotionSample {
    pub fn new(
        id: impl Into<String>,
        action: impl Into<String>,
        observed: MotionSequence,
        future: MotionSequence,
    ) -> Result<Self, DataError> {
        let id = id.into();
        if observed.fps() != future.fps() {
            return Err(DataError::Inconsistent(format!(
                "sample {id:?}: observed and future fps differ"
            )));
        }
        if observed.joint_count() != future.joint_count() {
            return Err(DataError::Inconsistent(format!(
                "sample {id:?}: observed and future joint counts differ"
            )));
        }
        Ok(MotionSample {
            id,
            action: action.into(),
            observed,
            future,
        })
    }

    /// Observed frames followed by future frames.
    pub fn all_frames(&self) -> impl Iterator<Item = &Pose> {
        self.observed.frames().iter().chain(self.future.frames())
    }

    pub fn l_frames(&self) -> usize {
        self.observed.frame_count()
    }

    pub fn j_frames(&self) -> usize {
        self.future.frame_count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollectionRole {
    BaseTrainingSet,
    SupportSet,
    TestSet,
}

impl fmt::Display for CollectionRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CollectionRole::BaseTrainingSet => "base_training_set",
            CollectionRole::SupportSet => "support_set",
            CollectionRole::TestSet => "test_set",
        })
    }
}

/// Samples sharing one skeleton, fps and window lengths, sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCollection {
    samples: Vec<MotionSample>,
    role: CollectionRole,
}

impl SampleCollection {
    pub fn new(mut samples: Vec<MotionSample>, role: CollectionRole) -> Result<Self, DataError> {
        samples.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in samples.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(DataError::DuplicateId(pair[0].id.clone()));
            }
        }
        if let Some(first) = samples.first() {
            for s in &samples[1..] {
                if s.observed.fps() != first.observed.fps()
                    || s.l_frames() != first.l_frames()
                    || s.j_frames() != first.j_frames()
                    || s.observed.joint_count() != first.observed.joint_count()
                {
                    return Err(DataError::Inconsistent(format!(
                        "sample {:?} differs from {:?} in fps, window length or joint count",
                        s.id, first.id
                    )));
                }
            }
        }
        Ok(SampleCollection { samples, role })
    }

    pub fn samples(&self) -> &[MotionSample] {
        &self.samples
    }

    pub fn role(&self) -> CollectionRole {
        self.role
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&MotionSample> {
        self.samples
            .binary_search_by(|s| s.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.samples[i])
    }

    pub fn ids(&self) -> Vec<String> {
        self.samples.iter().map(|s| s.id.clone()).collect()
    }
}

/// One line of a sample file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub action: String,
    pub fps: f64,
    pub frames: Vec<Vec<Vec<Option<f64>>>>,
}

impl SampleRecord {
    /// Record holding `observed ⧺ future` of a sample.
    pub fn from_sample(sample: &MotionSample) -> SampleRecord {
        SampleRecord {
            id: sample.id.clone(),
            action: sample.action.clone(),
            fps: sample.observed.fps(),
            frames: sample
                .all_frames()
                .map(|p| {
                    p.coords()
                        .iter()
                        .map(|c| c.iter().map(|&v| Some(v)).collect())
                        .collect()
                })
                .collect(),
        }
    }

    fn into_sample(self, skeleton: &SkeletonSpec, l_frames: usize, j_frames: usize) -> Result<MotionSample, DataError> {
        let needed = l_frames + j_frames;
        if self.frames.len() < needed {
            return Err(DataError::TooFewFrames {
                id: self.id,
                found: self.frames.len(),
                needed,
            });
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(DataError::Inconsistent(format!(
                "record {:?}: fps must be positive",
                self.id
            )));
        }
        let expected = skeleton.joint_count();
        let mut poses = Vec::with_capacity(needed);
        for (f, frame) in self.frames.iter().take(needed).enumerate() {
            if frame.len() != expected {
                return Err(DataError::JointCount {
                    id: self.id.clone(),
                    frame: f + 1,
                    found: frame.len(),
                    expected,
                });
            }
            let mut coords = Vec::with_capacity(expected);
            for joint in frame {
                if joint.len() != 3 {
                    return Err(DataError::Malformed(format!(
                        "record {:?}: frame {} has a joint with {} coordinates",
                        self.id,
                        f + 1,
                        joint.len()
                    )));
                }
                let mut xyz = [0.0; 3];
                for (slot, v) in xyz.iter_mut().zip(joint) {
                    match v {
                        Some(v) if v.is_finite() => *slot = *v,
                        _ => {
                            return Err(DataError::NonFinite {
                                id: self.id.clone(),
                                frame: f + 1,
                            })
                        }
                    }
                }
                coords.push(xyz);
            }
            poses.push(Pose { coords });
        }
        let future = poses.split_off(l_frames);
        MotionSample::new(
            self.id,
            self.action,
            MotionSequence::new(poses, self.fps)?,
            MotionSequence::new(future, self.fps)?,
        )
    }
}

/// Replaces bare `NaN` / `Infinity` / `-Infinity` tokens (as written by some
/// JSON encoders) with `null` so they surface as non-finite coordinates
/// rather than as parse errors.
fn neutralize_non_finite(line: &str) -> Cow<'_, str> {
    if !(line.contains("NaN") || line.contains("Infinity")) {
        return Cow::Borrowed(line);
    }
    let mut out = String::with_capacity(line.len());
    let mut in_string = false;
    let mut escaped = false;
    let mut rest = line;
    while let Some(c) = rest.chars().next() {
        if in_string {
            out.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            rest = &rest[c.len_utf8()..];
            continue;
        }
        let token = ["-Infinity", "Infinity", "NaN"]
            .into_iter()
            .find(|t| rest.starts_with(t));
        if let Some(t) = token {
            out.push_str("null");
            rest = &rest[t.len()..];
            continue;
        }
        if c == '"' {
            in_string = true;
        }
        out.push(c);
        rest = &rest[c.len_utf8()..];
    }
    Cow::Owned(out)
}

fn sample_files(path: &Path) -> Result<Vec<PathBuf>, DataError> {
    if path.is_dir() {
        let mut files = Vec::new();
        for entry in std::fs::read_dir(path).map_err(|e| DataError::io(path, e))? {
            let p = entry.map_err(|e| DataError::io(path, e))?.path();
            if p.extension().is_some_and(|e| e == "jsonl") {
                files.push(p);
            }
        }
        files.sort();
        Ok(files)
    } else {
        Ok(vec![path.to_path_buf()])
    }
}

/// Parses sample records from JSON-lines text.
pub fn parse_records(text: &str, origin: &str) -> Result<Vec<SampleRecord>, DataError> {
    let mut records = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: SampleRecord = serde_json::from_str(&neutralize_non_finite(line))
            .map_err(|e| DataError::Malformed(format!("{origin}:{}: {e}", n + 1)))?;
        records.push(record);
    }
    Ok(records)
}

/// Loads every record from a `.jsonl` file, or from all `.jsonl` files of a
/// directory, and splits each into observed and future windows.
pub fn load_samples(
    path: impl AsRef<Path>,
    skeleton: &SkeletonSpec,
    l_frames: usize,
    j_frames: usize,
    role: CollectionRole,
) -> Result<SampleCollection, DataError> {
    if l_frames == 0 || j_frames == 0 {
        return Err(DataError::Inconsistent(
            "observed and future window lengths must be positive".into(),
        ));
    }
    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    for file in sample_files(path.as_ref())? {
        let text = std::fs::read_to_string(&file).map_err(|e| DataError::io(&file, e))?;
        for record in parse_records(&text, &file.display().to_string())? {
            if !seen.insert(record.id.clone()) {
                return Err(DataError::DuplicateId(record.id));
            }
            samples.push(record.into_sample(skeleton, l_frames, j_frames)?);
        }
    }
    SampleCollection::new(samples, role)
}

/// Writes samples as JSON lines, one record per sample.
pub fn write_samples(path: impl AsRef<Path>, samples: &[MotionSample]) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut text = String::new();
    for s in samples {
        text.push_str(&serde_json::to_string(&SampleRecord::from_sample(s)).expect("record serializes"));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| DataError::io(path, e))
}

/// Joint names and positions of a pose in central-to-peripheral order.
pub fn kinematic_order<'a>(pose: &Pose, skeleton: &'a SkeletonSpec) -> Result<Vec<(&'a str, [f64; 3])>, DataError> {
    pose.check_skeleton(skeleton)?;
    Ok(skeleton
        .traversal()
        .iter()
        .map(|&j| (skeleton.joint_name(j), pose.joint(j)))
        .collect())
}
