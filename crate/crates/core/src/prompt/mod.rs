//! Rendering motion into chat prompts and reading predicted coordinates back.

mod parse;
mod render;
mod script;
pub mod templates;

use thiserror::Error;

pub use parse::{
    extract_frames, parse_prediction, parse_prediction_with, ParseError, ParseOptions, ParsedPrediction, Span,
};
pub use render::{
    build_prediction_prompt, format_number, format_pose, render_sequence, rendered_indices, MAX_PRECISION,
};
pub use script::{build_practice_script, ChatTurn, DemonstrationScript, ScriptLayout, Sender, TurnTag};

use crate::error::DataError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PromptError {
    #[error("precision {0} outside 0..=6")]
    BadPrecision(usize),
    #[error("stride must be at least 1")]
    BadStride,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("got {p} pre-selected and {n} support samples, expected {expected_p} and {expected_n}")]
    WrongCounts {
        p: usize,
        n: usize,
        expected_p: usize,
        expected_n: usize,
    },
}

impl From<DataError> for PromptError {
    fn from(e: DataError) -> Self {
        PromptError::Shape(e.to_string())
    }
}
