//! Scenario loading, round scheduling, and report emission.

pub mod builtins;
pub mod report;
pub mod runner;
pub mod scenario;

use thiserror::Error;

use crate::controller_agent::AgentError;
use crate::noticeboard::BoardError;
use crate::policy_distributor::DistributorError;
use crate::switch_sim::SwitchError;
use crate::trust_collector::CollectorError;

pub use builtins::{builtin_scenario, builtin_scenario_seeded, Builtin, DEFAULT_SEED};
pub use report::{emit_report, to_json, write_csv, ReportFormat};
pub use runner::{run_scenario, Detection, RunReport, Schedule, Simulation};
pub use scenario::{load_scenario, FaultBinding, Scenario, ScenarioFile, SwitchLayout};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot parse scenario: {0}")]
    Parse(#[source] serde_json::Error),
    #[error("invalid scenario field `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("unknown built-in scenario {0:?}")]
    UnknownScenario(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot encode report: {0}")]
    Encode(#[source] serde_json::Error),
    #[error(transparent)]
    Board(#[from] BoardError),
    #[error(transparent)]
    Switch(#[from] SwitchError),
    #[error(transparent)]
    Distributor(#[from] DistributorError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Collector(#[from] CollectorError),
}

impl HarnessError {
    /// Process exit code: 2 for bad input, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Parse(_)
            | HarnessError::Validation { .. }
            | HarnessError::UnknownScenario(_) => 2,
            _ => 3,
        }
    }
}
