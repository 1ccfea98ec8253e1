use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::predict::load_action;
use super::{
    failure_rel, prediction_rel, read_json, write_json, FailureRecord, PipelineConfig, PipelineError, PredictionRecord,
    SelectionArtifact, REPORT_CSV, REPORT_JSON, SELECTION_FILE,
};
use crate::data::{CollectionRole, MotionSequence, Pose};
use crate::metrics::{mpjpe_table, MpjpeReport};
use crate::selection::{bound_check, BoundCheckSummary};
use crate::skeleton::load_skeleton;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionReport {
    pub completed: usize,
    pub failed: usize,
    /// Uniform mean over completed samples; absent when none completed.
    pub mpjpe: Option<MpjpeReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureEntry {
    pub action: String,
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleLink {
    pub id: String,
    /// Output-relative paths.
    pub prediction: String,
    pub transcript: Option<String>,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub selection: String,
    pub selection_key: String,
    pub selected_ids: Vec<String>,
    pub samples: BTreeMap<String, Vec<SampleLink>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub horizons_ms: Vec<u32>,
    pub per_action: BTreeMap<String, ActionReport>,
    /// Mean of the per-action rows.
    pub overall: Option<MpjpeReport>,
    pub failures: Vec<FailureEntry>,
    pub provenance: Provenance,
    pub bound_check: BoundCheckSummary,
}

fn row(label: &str, r: Option<&MpjpeReport>, horizons: &[u32]) -> Vec<String> {
    let mut cells = vec![label.to_string()];
    match r {
        Some(r) => {
            cells.extend(horizons.iter().map(|h| format!("{:.1}", r.per_horizon[h])));
            cells.push(format!("{:.1}", r.average));
        }
        None => cells.extend(std::iter::repeat_n("n/a".to_string(), horizons.len() + 1)),
    }
    cells
}

impl EvaluationReport {
    fn rows(&self) -> Vec<Vec<String>> {
        let mut header = vec!["action".to_string()];
        header.extend(self.horizons_ms.iter().map(|h| format!("{h}ms")));
        header.push("Avg.".into());
        let mut rows = vec![header];
        for (action, r) in &self.per_action {
            rows.push(row(action, r.mpjpe.as_ref(), &self.horizons_ms));
        }
        rows.push(row("Average", self.overall.as_ref(), &self.horizons_ms));
        rows
    }

    /// One row per action plus the cross-action average, errors in mm.
    pub fn to_csv(&self) -> String {
        self.rows().iter().map(|r| r.join(",") + "\n").collect()
    }

    /// Column-aligned rendering of [`to_csv`](Self::to_csv), followed by
    /// failures and the bound check.
    pub fn to_table(&self) -> String {
        let rows = self.rows();
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for r in &rows {
            let line: Vec<String> = r
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, w))| {
                    if c == 0 {
                        format!("{cell:<w$}")
                    } else {
                        format!("{cell:>w$}")
                    }
                })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        if !self.failures.is_empty() {
            let _ = writeln!(out, "\nfailed samples ({}):", self.failures.len());
            for f in &self.failures {
                let _ = writeln!(out, "  {}/{}: {}", f.action, f.id, f.error);
            }
        }
        let b = &self.bound_check;
        let _ = writeln!(
            out,
            "\nbound check: {} violations in {} checks over {} fixtures (min ratio {:.4})",
            b.violations, b.checks, b.fixtures, b.min_ratio
        );
        out
    }
}

/// Test sets present under the configured test directory, sorted.
fn discover_actions(config: &PipelineConfig) -> Result<Vec<String>, PipelineError> {
    let dir = config.resolve(&config.test);
    let entries = std::fs::read_dir(&dir).map_err(|e| PipelineError::io(&dir, e))?;
    let mut actions: Vec<String> = entries
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .collect();
    actions.sort();
    Ok(actions)
}

/// Scores every test sample of each action against its ground truth and
/// writes `report.json` and `report.csv`. Failed samples are listed, not
/// averaged; a sample with neither a prediction nor a failure record is an
/// error.
pub fn cmd_evaluate(config: &PipelineConfig, actions: &[String]) -> Result<EvaluationReport, PipelineError> {
    config.validate()?;
    let actions = if !actions.is_empty() {
        actions.to_vec()
    } else if !config.actions.is_empty() {
        config.actions.clone()
    } else {
        discover_actions(config)?
    };
    let out = config.output_dir();
    let selection_path = out.join(SELECTION_FILE);
    if !selection_path.exists() {
        return Err(PipelineError::MissingArtifact(selection_path.display().to_string()));
    }
    let selection: SelectionArtifact = read_json(&selection_path)?;
    let skeleton = load_skeleton(config.resolve(&config.skeleton))?;

    let mut per_action = BTreeMap::new();
    let mut failures = Vec::new();
    let mut links = BTreeMap::new();
    for action in &actions {
        let tests = load_action(config, &skeleton, action, CollectionRole::TestSet)?;
        let mut reports = Vec::new();
        let mut action_links = Vec::new();
        let mut failed = 0;
        for sample in tests.samples() {
            let pred_path = out.join(prediction_rel(action, &sample.id));
            let fail_path = out.join(failure_rel(action, &sample.id));
            if pred_path.exists() {
                let record: PredictionRecord = read_json(&pred_path)?;
                if record.id != sample.id || record.action != *action {
                    return Err(PipelineError::Config(format!(
                        "{} holds sample {:?} of action {:?}",
                        pred_path.display(),
                        record.id,
                        record.action
                    )));
                }
                let poses = record
                    .frames
                    .into_iter()
                    .map(Pose::new)
                    .collect::<Result<Vec<_>, _>>()?;
                let predicted = MotionSequence::new(poses, record.fps)?;
                reports.push(mpjpe_table(&predicted, &sample.future, &config.horizons_ms)?);
                action_links.push(SampleLink {
                    id: sample.id.clone(),
                    prediction: prediction_rel(action, &sample.id),
                    transcript: Some(record.transcript),
                    config_hash: record.config_hash,
                });
            } else if fail_path.exists() {
                let record: FailureRecord = read_json(&fail_path)?;
                failed += 1;
                failures.push(FailureEntry {
                    action: action.clone(),
                    id: sample.id.clone(),
                    error: record.error,
                });
                action_links.push(SampleLink {
                    id: sample.id.clone(),
                    prediction: failure_rel(action, &sample.id),
                    transcript: record.transcript,
                    config_hash: record.config_hash,
                });
            } else {
                return Err(PipelineError::MissingPrediction {
                    action: action.clone(),
                    id: sample.id.clone(),
                });
            }
        }
        let mpjpe = if reports.is_empty() {
            None
        } else {
            Some(MpjpeReport::mean_of(&reports)?)
        };
        per_action.insert(
            action.clone(),
            ActionReport {
                completed: reports.len(),
                failed,
                mpjpe,
            },
        );
        links.insert(action.clone(), action_links);
    }
    let rows: Vec<MpjpeReport> = per_action.values().filter_map(|r| r.mpjpe.clone()).collect();
    let overall = if rows.is_empty() {
        None
    } else {
        Some(MpjpeReport::mean_of(&rows)?)
    };
    let report = EvaluationReport {
        horizons_ms: config.horizons_ms.clone(),
        per_action,
        overall,
        failures,
        provenance: Provenance {
            config_hash: config.hash(),
            selection: SELECTION_FILE.to_string(),
            selection_key: selection.key,
            selected_ids: selection.result.chosen_ids,
            samples: links,
        },
        bound_check: bound_check(config.bound_check_fixtures, config.seed)?,
    };
    write_json(&out.join(REPORT_JSON), &report)?;
    let csv_path = out.join(REPORT_CSV);
    std::fs::write(&csv_path, report.to_csv()).map_err(|e| PipelineError::io(&csv_path, e))?;
    Ok(report)
}

/// Table view of the saved report.
pub fn cmd_report(config: &PipelineConfig) -> Result<String, PipelineError> {
    let path = config.output_dir().join(REPORT_JSON);
    if !path.exists() {
        return Err(PipelineError::MissingArtifact(path.display().to_string()));
    }
    let report: EvaluationReport = read_json(&path)?;
    Ok(report.to_table())
}
