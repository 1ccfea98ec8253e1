//! End-to-end runs: pre-selection, per-sample prediction sessions and
//! evaluation reports, all persisted under the configured output directory.
//!
//! Output layout:
//!
//! ```text
//! selection.json
//! cache/matrices-<hash>.json
//! predictions/<action>/<id>.json          completed sessions
//! predictions/<action>/<id>.failed.json   failed sessions
//! transcripts/<action>/<id>.jsonl
//! report.json, report.csv
//! ```

mod config;
mod evaluate;
mod predict;
mod preselect;

use std::path::Path;

use serde::Serialize;
use thiserror::Error;

pub use config::PipelineConfig;
pub use evaluate::{cmd_evaluate, cmd_report, ActionReport, EvaluationReport, FailureEntry, Provenance, SampleLink};
pub use predict::{cmd_predict, FailureRecord, PredictSummary, PredictionRecord};
pub use preselect::{cmd_preselect, SelectionArtifact};

use crate::error::{DataError, MetricsError};
use crate::selection::SelectionError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {message}")]
    Json { path: String, message: String },
    #[error("no prediction for sample {id:?} of action {action:?}")]
    MissingPrediction { action: String, id: String },
    #[error("{0} not found; run the preceding step first")]
    MissingArtifact(String),
}

impl PipelineError {
    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        PipelineError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Json {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Relative artifact paths, always with `/` separators.
pub(crate) fn prediction_rel(action: &str, id: &str) -> String {
    format!("predictions/{action}/{id}.json")
}

pub(crate) fn failure_rel(action: &str, id: &str) -> String {
    format!("predictions/{action}/{id}.failed.json")
}

pub(crate) fn transcript_rel(action: &str, id: &str) -> String {
    format!("transcripts/{action}/{id}.jsonl")
}

pub(crate) const SELECTION_FILE: &str = "selection.json";
pub(crate) const REPORT_JSON: &str = "report.json";
pub(crate) const REPORT_CSV: &str = "report.csv";
