//! JSON-configured batch pipeline and its file artifacts.

use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
}

pub fn placeholder(_p: &Path) {}
