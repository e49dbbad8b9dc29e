//! Experiment orchestration: the hint-augmented training loop, policy and
//! hint-quality evaluation, and condition grids.

mod config;
mod eval;
mod grid;
mod metrics;
mod providers;
mod train;

use thiserror::Error;

pub use config::{ExperimentConfig, HintsConfig, ProviderKind};
pub use eval::{
    evaluate_hint_quality, evaluate_policy, load_policy, write_quality, EvalResult,
    HintQualityRecord, Policy, QualitySummary,
};
pub use grid::{run_experiment, run_grid, GridReport, GridRow, SeedResult};
pub use metrics::{
    format_frames, format_speedup, frames_to_threshold, median_threshold, speedup, MetricPoint,
    Threshold, WinWindow,
};
pub use providers::{build_provider, AntiOracleProvider};
pub use train::{read_metrics, read_trace, train, RunOutcome, StepTrace};

use crate::env::EnvError;
use crate::llm::LlmError;
use crate::rl::RlError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Rl(#[from] RlError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<LlmError> for HarnessError {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::Config(m) => HarnessError::Config {
                key: "llm".into(),
                message: m,
            },
            other => HarnessError::Internal(other.to_string()),
        }
    }
}

impl HarnessError {
    /// Configuration and usage problems versus runtime failures.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            HarnessError::Config { .. } | HarnessError::Usage(_) | HarnessError::Rl(RlError::DimensionMismatch { .. })
        )
    }
}
