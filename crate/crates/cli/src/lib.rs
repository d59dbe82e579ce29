//! File formats, instance generation, pipelines, plots and benchmarks behind
//! the `offsetph` binary.

pub mod barcode_file;
pub mod bench;
pub mod generate;
pub mod instance;
pub mod pipeline;
pub mod plot;

use thiserror::Error;

pub use barcode_file::{compare, BarcodeFile, Meta};
pub use generate::{generate, GenConfig};
pub use instance::{parse_instance, write_instance};
pub use pipeline::{run_pipeline, Pipeline, Run, ZERO_BAR_TOL};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid instance: {0}")]
    Instance(String),
    #[error("{0}")]
    Degenerate(String),
    #[error("{n} sites exceed the full-nerve cap of {cap}")]
    CechCap { n: usize, cap: usize },
    #[error("sample would exceed {cap} points")]
    SampleTooLarge { cap: usize },
    #[error("malformed barcode file: {0}")]
    Malformed(String),
    #[error("generator placed {placed} of {n} polygons before {rejections} consecutive rejections")]
    Generator { placed: usize, n: usize, rejections: usize },
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Internal(_) => 1,
            CliError::Instance(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::CechCap { .. } => 4,
            CliError::SampleTooLarge { .. } => 5,
            CliError::Malformed(_) => 6,
            CliError::Generator { .. } => 7,
        }
    }
}

/// Shortest decimal that parses back to `x`.
pub(crate) fn fmt_num(x: f64) -> String {
    serde_json::to_string(&x).expect("finite number")
}
