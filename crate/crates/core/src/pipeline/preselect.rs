use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{read_json, write_json, PipelineConfig, PipelineError, SELECTION_FILE};
use crate::data::{load_samples, CollectionRole, SampleCollection, SampleRecord};
use crate::metrics::DistanceOptions;
use crate::selection::{build_matrices, greedy_select, NormalizedSimilarityMatrix, SelectionResult};
use crate::skeleton::{load_skeleton, SkeletonSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionArtifact {
    /// Hash over every input that affects the result.
    pub key: String,
    /// Hash of the base set content and skeleton.
    pub base_hash: String,
    pub p: usize,
    pub mc_runs: u64,
    pub distance: DistanceOptions,
    #[serde(flatten)]
    pub result: SelectionResult,
}

fn sha(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    format!("{:x}", h.finalize())
}

/// Content hash of a collection: independent of file layout and order.
pub(crate) fn content_hash(base: &SampleCollection, skeleton: &SkeletonSpec) -> String {
    let mut parts = vec![serde_json::to_string(&skeleton.to_file_repr()).expect("skeleton serializes")];
    parts.extend(
        base.samples()
            .iter()
            .map(|s| serde_json::to_string(&SampleRecord::from_sample(s)).expect("record serializes")),
    );
    let refs: Vec<&str> = parts.iter().map(String::as_str).collect();
    sha(&refs)
}

pub(crate) fn load_base(config: &PipelineConfig, skeleton: &SkeletonSpec) -> Result<SampleCollection, PipelineError> {
    let base = load_samples(
        config.resolve(&config.base),
        skeleton,
        config.l_frames,
        config.j_frames,
        CollectionRole::BaseTrainingSet,
    )?;
    check_fps(config, &base)?;
    Ok(base)
}

pub(crate) fn check_fps(config: &PipelineConfig, c: &SampleCollection) -> Result<(), PipelineError> {
    match c.samples().iter().find(|s| s.observed.fps() != config.fps) {
        Some(s) => Err(PipelineError::Config(format!(
            "sample {:?} is recorded at {} fps, config says {}",
            s.id,
            s.observed.fps(),
            config.fps
        ))),
        None => Ok(()),
    }
}

fn matrices(
    config: &PipelineConfig,
    base: &SampleCollection,
    skeleton: &SkeletonSpec,
    base_hash: &str,
) -> Result<NormalizedSimilarityMatrix, PipelineError> {
    let options = serde_json::to_string(&config.distance).expect("options serialize");
    let key = sha(&[base_hash, &options]);
    let path = config.output_dir().join("cache").join(format!("matrices-{key}.json"));
    if path.exists() {
        if let Ok(mn) = read_json::<NormalizedSimilarityMatrix>(&path) {
            log::info!("reusing similarity matrix {}", path.display());
            return Ok(mn);
        }
        log::warn!("ignoring unreadable cache {}", path.display());
    }
    let (_, mn) = build_matrices(base, skeleton, config.distance)?;
    write_json(&path, &mn)?;
    Ok(mn)
}

/// Selects `p_preselect` base samples and writes `selection.json`. A
/// selection whose key matches the current inputs is reused untouched.
pub fn cmd_preselect(config: &PipelineConfig) -> Result<SelectionArtifact, PipelineError> {
    config.validate()?;
    let skeleton = load_skeleton(config.resolve(&config.skeleton))?;
    let base = load_base(config, &skeleton)?;
    if config.p_preselect > base.len() {
        return Err(PipelineError::Config(format!(
            "p_preselect = {} exceeds the {} base samples",
            config.p_preselect,
            base.len()
        )));
    }
    let base_hash = content_hash(&base, &skeleton);
    let options = serde_json::to_string(&config.distance).expect("options serialize");
    let key = sha(&[
        &base_hash,
        &options,
        &config.p_preselect.to_string(),
        &config.mc_runs.to_string(),
        &config.seed.to_string(),
    ]);
    let path = config.output_dir().join(SELECTION_FILE);
    if path.exists() {
        if let Ok(existing) = read_json::<SelectionArtifact>(&path) {
            if existing.key == key {
                log::info!("selection up to date: {}", path.display());
                return Ok(existing);
            }
        }
    }
    let mn = matrices(config, &base, &skeleton, &base_hash)?;
    let result = greedy_select(config.p_preselect, &mn, config.mc_runs, config.seed)?;
    let artifact = SelectionArtifact {
        key,
        base_hash,
        p: config.p_preselect,
        mc_runs: config.mc_runs,
        distance: config.distance,
        result,
    };
    write_json(&path, &artifact)?;
    Ok(artifact)
}
