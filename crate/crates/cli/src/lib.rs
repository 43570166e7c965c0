//! Experiment harness: variant grid, class orders, baseline classifier,
//! order-sensitivity statistics and report emission.

pub mod baseline;
pub mod config;
pub mod experiment;
pub mod report;
pub mod variant;

use thiserror::Error;

pub use baseline::{run_baseline_episode, BaselineConfig, BaselineModel};
pub use config::{
    DataSource, ExperimentConfig, ExperimentKind, GeneratorKind, ImaginationConfig, KwGrouping,
    OrdersMode, ParamsFile,
};
pub use experiment::{
    run_experiment1, run_experiment2, run_experiment_with, run_order_sensitivity, CellOutcome,
    ExperimentOutput, RunOptions, RunRecord,
};
pub use variant::Variant;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad command line or configuration; exit code 1.
    #[error("{0}")]
    Usage(String),
    /// Invalid or insufficient data; exit code 2.
    #[error(transparent)]
    Data(#[from] clifer_core::Error),
    /// Execution failure; exit code 3.
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 1,
            HarnessError::Data(clifer_core::Error::Io(_)) => 3,
            HarnessError::Data(_) => 2,
            HarnessError::Runtime(_) => 3,
        }
    }
}
