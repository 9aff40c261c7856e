//! Config-driven experiments, privacy audits and result plots.

mod audit;
mod config;
mod experiment;
mod plot;

pub use audit::{
    pipeline_distance, pipeline_neighbors, pipeline_outcome, pipeline_params, run_audit, AuditRow, AuditSummary,
    AUDIT_SCHEMA_VERSION,
};
pub use config::{
    build_decoder, build_params, AuditConfig, AuditKind, DecoderConfig, Experiment, ExperimentConfig, GridConfig,
    JudgeConfig, JudgeMethod, LiftModeConfig, ParamsConfig, PipelineConfig,
};
pub use experiment::{judge_tv, run_experiment, run_trial, write_rows, ResultRow, RESULT_SCHEMA_VERSION};
pub use plot::{plot_results, render_svg};

use thiserror::Error;

use crate::decode::DecodeError;
use crate::distributions::DistError;
use crate::mde::MdeError;
use crate::mechanisms::MechanismError;
use crate::reduction::ReductionError;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// The config is malformed or asks for something impossible.
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Distribution(#[from] DistError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Mde(#[from] MdeError),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

impl HarnessError {
    /// 2 for config errors, 3 for anything that failed at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
