//! Few-shot human motion prediction with an off-the-shelf chat model.
//!
//! The crate selects representative in-context examples from a base set,
//! renders them into a practice-then-answer-key chat protocol, drives the
//! session against a chat provider, parses joint coordinates back out of the
//! answer and scores them with MPJPE.

pub mod data;
pub mod error;
pub mod fixtures;
pub mod gateway;
pub mod metrics;
pub mod pipeline;
pub mod prompt;
pub mod selection;
pub mod skeleton;
pub mod synth;

pub use data::{kinematic_order, load_samples, CollectionRole, MotionSample, MotionSequence, Pose, SampleCollection};
pub use error::{DataError, MetricsError};
pub use metrics::{mpjpe_at, mpjpe_table, sample_distance, MpjpeReport, SampleDistance};
pub use skeleton::{load_skeleton, BodyPart, SkeletonSpec};
