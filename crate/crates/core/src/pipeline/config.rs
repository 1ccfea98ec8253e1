use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::gateway::ProviderConfig;
use crate::metrics::{horizon_frame, horizon_is_exact, DistanceOptions, DEFAULT_HORIZONS_MS};
use crate::prompt::{ScriptLayout, MAX_PRECISION};

/// Run configuration, read from a TOML file. Relative paths resolve against
/// the directory holding the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub skeleton: PathBuf,
    /// Base training set: a `.jsonl` file or a directory of them.
    pub base: PathBuf,
    /// Directory holding `<action>.jsonl` support sets.
    pub support: PathBuf,
    /// Directory holding `<action>.jsonl` test sets.
    pub test: PathBuf,
    pub output: PathBuf,
    /// Actions evaluated when none are named; empty means every test set.
    pub actions: Vec<String>,
    pub l_frames: usize,
    pub j_frames: usize,
    pub fps: f64,
    pub n_support: usize,
    pub p_preselect: usize,
    pub mc_runs: u64,
    pub seed: u64,
    pub precision: usize,
    pub stride: usize,
    pub horizons_ms: Vec<u32>,
    pub max_repairs: usize,
    /// Concurrent sessions per action.
    pub workers: usize,
    /// Random enumerable instances in the report's bound check.
    pub bound_check_fixtures: usize,
    pub distance: DistanceOptions,
    pub provider: ProviderConfig,
    #[serde(skip)]
    root: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            skeleton: "skeleton.json".into(),
            base: "base.jsonl".into(),
            support: "support".into(),
            test: "test".into(),
            output: "out".into(),
            actions: Vec::new(),
            l_frames: 50,
            j_frames: 25,
            fps: 25.0,
            n_support: 5,
            p_preselect: 10,
            mc_runs: 100,
            seed: 0,
            precision: 1,
            stride: 2,
            horizons_ms: DEFAULT_HORIZONS_MS.to_vec(),
            max_repairs: 2,
            workers: 4,
            bound_check_fixtures: 20,
            distance: DistanceOptions::default(),
            provider: ProviderConfig::default(),
            root: PathBuf::new(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str, root: impl Into<PathBuf>) -> Result<Self, PipelineError> {
        let mut config: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.root = root.into();
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, root)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Directory that relative paths resolve against.
    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn set_root(&mut self, root: impl Into<PathBuf>) {
        self.root = root.into();
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.root.join(p)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.l_frames == 0 || self.j_frames == 0 {
            return bad("l_frames and j_frames must be positive".into());
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return bad(format!("fps must be positive, got {}", self.fps));
        }
        if self.p_preselect == 0 {
            return bad("p_preselect must be at least 1".into());
        }
        if self.mc_runs == 0 {
            return bad("mc_runs must be at least 1".into());
        }
        if self.precision > MAX_PRECISION {
            return bad(format!("precision {} exceeds {MAX_PRECISION}", self.precision));
        }
        if self.stride == 0 || self.workers == 0 {
            return bad("stride and workers must be at least 1".into());
        }
        if self.horizons_ms.is_empty() {
            return bad("horizons_ms is empty".into());
        }
        for &h in &self.horizons_ms {
            let frame = horizon_frame(h, self.fps);
            if !horizon_is_exact(h, self.fps) {
                return bad(format!(
                    "horizon {h} ms is not a whole number of frames at {} fps",
                    self.fps
                ));
            }
            if frame < 1 || frame as usize > self.j_frames {
                return bad(format!(
                    "horizon {h} ms maps to frame {frame}, outside 1..={}",
                    self.j_frames
                ));
            }
        }
        self.provider
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// sha256 of the canonical JSON form, paths as written.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }

    pub fn layout(&self) -> ScriptLayout {
        ScriptLayout {
            p: self.p_preselect,
            n: self.n_support,
            l_frames: self.l_frames,
            j_frames: self.j_frames,
            precision: self.precision,
            stride: self.stride,
        }
    }
}
