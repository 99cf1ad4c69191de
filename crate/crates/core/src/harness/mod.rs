//! Scenario-driven front end: configuration, dispatch and table output.

pub mod cli;
pub mod config;
pub mod output;
pub mod scenarios;

pub use config::{ConfigError, Scenario, ScenarioConfig};
pub use output::{Format, OutputError, ResultTable};
pub use scenarios::{acceptance_passed, run_scenario};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("scenario {scenario}: {source}")]
    Physics {
        scenario: Scenario,
        #[source]
        source: crate::Error,
    },
    #[error(transparent)]
    Output(#[from] OutputError),
}

impl HarnessError {
    /// 1 for usage, configuration and I/O problems, 2 for physics failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Physics { .. } => 2,
            _ => 1,
        }
    }
}
