//! Pipeline plumbing behind the `fedipol` binary.

pub mod config;
pub mod manifest;
pub mod pipeline;
pub mod stages;

pub use config::{ConfigError, PipelineConfig};
pub use manifest::Manifest;
pub use pipeline::{run_pipeline, PipelineError, PipelineOutcome};
