use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed file: {0}")]
    Malformed(String),
    #[error("invalid skeleton: {0}")]
    InvalidSkeleton(String),
    #[error("cyclic parent links through joint {0:?}")]
    CyclicParents(String),
    #[error("invalid body-part partition: {0}")]
    BadPartition(String),
    #[error("traversal violates parent-before-child order: {0}")]
    BadTraversal(String),
    #[error("record {id:?}: frame {frame} has {found} joints, skeleton has {expected}")]
    JointCount {
        id: String,
        frame: usize,
        found: usize,
        expected: usize,
    },
    #[error("record {id:?}: non-finite coordinate in frame {frame}")]
    NonFinite { id: String, frame: usize },
    #[error("record {id:?}: too few frames ({found} < {needed})")]
    TooFewFrames { id: String, found: usize, needed: usize },
    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),
    #[error("inconsistent collection: {0}")]
    Inconsistent(String),
    #[error("pose has {found} joints, skeleton has {expected}")]
    PoseMismatch { found: usize, expected: usize },
}

impl DataError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("horizon {horizon_ms}ms maps to frame {frame}, valid frames are 1..={frames}")]
    HorizonOutOfRange { horizon_ms: u32, frame: i64, frames: usize },
    #[error("horizon list is empty")]
    EmptyHorizons,
}
