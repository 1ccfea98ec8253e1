use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::preselect::{check_fps, load_base};
use super::{
    cmd_preselect, failure_rel, prediction_rel, transcript_rel, write_json, PipelineConfig, PipelineError,
    SELECTION_FILE,
};
use crate::data::{load_samples, CollectionRole, MotionSample, SampleCollection};
use crate::gateway::{connect, predict_with_repair, replay_path, RateLimiter, SessionContext};
use crate::prompt::{build_practice_script, TurnTag};
use crate::skeleton::{load_skeleton, SkeletonSpec};

/// Persisted result of one completed session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub action: String,
    pub config_hash: String,
    pub selection: String,
    pub transcript: String,
    pub repairs: usize,
    pub fps: f64,
    pub frame_numbers: Vec<Option<usize>>,
    pub warnings: Vec<String>,
    pub frames: Vec<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub id: String,
    pub action: String,
    pub config_hash: String,
    /// Partial or full transcript, when the session got that far.
    pub transcript: Option<String>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PredictSummary {
    pub action: String,
    pub completed: Vec<String>,
    /// `(id, error)` per failed sample.
    pub failed: Vec<(String, String)>,
}

pub(crate) fn action_file(dir: &Path, action: &str) -> std::path::PathBuf {
    dir.join(format!("{action}.jsonl"))
}

pub(crate) fn load_action(
    config: &PipelineConfig,
    skeleton: &SkeletonSpec,
    action: &str,
    role: CollectionRole,
) -> Result<SampleCollection, PipelineError> {
    let dir = match role {
        CollectionRole::SupportSet => &config.support,
        _ => &config.test,
    };
    let path = action_file(&config.resolve(dir), action);
    if !path.exists() {
        return Err(PipelineError::MissingArtifact(format!(
            "{role} for action {action:?} ({})",
            path.display()
        )));
    }
    let c = load_samples(path, skeleton, config.l_frames, config.j_frames, role)?;
    check_fps(config, &c)?;
    Ok(c)
}

struct Job<'a> {
    config: &'a PipelineConfig,
    config_hash: String,
    skeleton: &'a SkeletonSpec,
    action: &'a str,
    preselected: &'a [MotionSample],
    support: &'a [MotionSample],
    limiter: Arc<RateLimiter>,
    secrets: Vec<String>,
}

enum Outcome {
    Done,
    Failed(String),
}

impl Job<'_> {
    fn run(&self, test: &MotionSample) -> Result<Outcome, PipelineError> {
        let out = self.config.output_dir();
        let id = &test.id;
        let transcript_path = out.join(transcript_rel(self.action, id));
        let fail = |error: String, with_transcript: bool| -> Result<Outcome, PipelineError> {
            log::warn!("{}/{id}: {error}", self.action);
            let record = FailureRecord {
                id: id.clone(),
                action: self.action.to_string(),
                config_hash: self.config_hash.clone(),
                transcript: with_transcript.then(|| transcript_rel(self.action, id)),
                error: error.clone(),
            };
            write_json(&out.join(failure_rel(self.action, id)), &record)?;
            Ok(Outcome::Failed(error))
        };

        let script = match build_practice_script(
            self.preselected,
            self.support,
            &test.observed,
            self.skeleton,
            &self.config.layout(),
        ) {
            Ok(s) => s,
            Err(e) => return fail(e.to_string(), false),
        };
        let ctx = SessionContext {
            session: id,
            skeleton: self.skeleton,
            j_frames: self.config.j_frames,
            precision: self.config.precision,
            replay_file: self
                .config
                .provider
                .transcripts
                .as_ref()
                .map(|p| replay_path(&self.config.resolve(p), self.action, id)),
            limiter: Some(self.limiter.clone()),
        };
        let mut provider = match connect(&self.config.provider, &ctx) {
            Ok(p) => p,
            Err(e) => return fail(e.to_string(), false),
        };
        match predict_with_repair(
            &script,
            provider.as_mut(),
            &self.config.provider,
            self.skeleton,
            self.config.max_repairs,
        ) {
            Ok((parsed, transcript)) => {
                transcript
                    .write(&transcript_path, &self.secrets)
                    .map_err(|e| PipelineError::io(&transcript_path, e))?;
                let record = PredictionRecord {
                    id: id.clone(),
                    action: self.action.to_string(),
                    config_hash: self.config_hash.clone(),
                    selection: SELECTION_FILE.to_string(),
                    transcript: transcript_rel(self.action, id),
                    repairs: transcript.turns().iter().filter(|t| t.tag == TurnTag::Repair).count(),
                    fps: parsed.sequence.fps(),
                    frame_numbers: parsed.frame_numbers,
                    warnings: parsed.warnings,
                    frames: parsed.sequence.to_nested(),
                };
                write_json(&out.join(prediction_rel(self.action, id)), &record)?;
                Ok(Outcome::Done)
            }
            Err(e) => {
                let saved = match e.transcript() {
                    Some(t) => {
                        t.write(&transcript_path, &self.secrets)
                            .map_err(|err| PipelineError::io(&transcript_path, err))?;
                        true
                    }
                    None => false,
                };
                fail(e.to_string(), saved)
            }
        }
    }
}

fn clear_predictions(dir: &Path) -> Result<(), PipelineError> {
    let Ok(entries) = std::fs::read_dir(dir) else {
        return Ok(());
    };
    for entry in entries.flatten() {
        let path = entry.path();
        if path.extension().is_some_and(|e| e == "json") {
            std::fs::remove_file(&path).map_err(|e| PipelineError::io(&path, e))?;
        }
    }
    Ok(())
}

/// Runs one practice-exam session per test sample of `action` and writes
/// its prediction (or failure record) and transcript. Pre-selects first if
/// the selection is missing or stale. A failed sample does not stop the
/// others; the summary lists it.
pub fn cmd_predict(config: &PipelineConfig, action: &str) -> Result<PredictSummary, PipelineError> {
    let selection = cmd_preselect(config)?;
    let skeleton = load_skeleton(config.resolve(&config.skeleton))?;
    let base = load_base(config, &skeleton)?;
    let preselected: Vec<MotionSample> = selection
        .result
        .chosen_ids
        .iter()
        .map(|id| {
            base.get(id)
                .cloned()
                .ok_or_else(|| PipelineError::Config(format!("selected id {id:?} is not in the base set")))
        })
        .collect::<Result<_, _>>()?;
    let support = load_action(config, &skeleton, action, CollectionRole::SupportSet)?;
    if support.len() != config.n_support {
        return Err(PipelineError::Config(format!(
            "action {action:?} has {} support samples, n_support = {}",
            support.len(),
            config.n_support
        )));
    }
    let tests = load_action(config, &skeleton, action, CollectionRole::TestSet)?;

    clear_predictions(&config.output_dir().join("predictions").join(action))?;
    let job = Job {
        config,
        config_hash: config.hash(),
        skeleton: &skeleton,
        action,
        preselected: &preselected,
        support: support.samples(),
        limiter: Arc::new(RateLimiter::per_minute(config.provider.rate_limit_per_min)),
        secrets: config.provider.secrets(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| PipelineError::Config(format!("worker pool: {e}")))?;
    let outcomes: Vec<Result<Outcome, PipelineError>> =
        pool.install(|| tests.samples().par_iter().map(|t| job.run(t)).collect());

    let mut summary = PredictSummary {
        action: action.to_string(),
        ..PredictSummary::default()
    };
    for (sample, outcome) in tests.samples().iter().zip(outcomes) {
        match outcome? {
            Outcome::Done => summary.completed.push(sample.id.clone()),
            Outcome::Failed(e) => summary.failed.push((sample.id.clone(), e)),
        }
    }
    Ok(summary)
}
