//! Experiment configuration, runners and reports.
//!
//! Configs are TOML files with the sections documented in `docs/config.md`.
//! A config may carry a `[sweep]` section, which expands it into the
//! cartesian product of the listed protocols, topologies and bandwidths.

mod config;
mod report;
mod runner;
mod scenarios;

use std::path::PathBuf;

use thiserror::Error;

use crate::adversary::AdversaryError;
use crate::simnet::SimError;

pub use config::{
    load_config, parse_config, read_config, AdversarySection, BindingSpec, ExperimentConfig, NetworkSection,
    OutputSection, ProtocolSection, SweepSection, WorkloadSection,
};
pub use report::{append_csv, write_csv, write_json, ReportRow, CSV_COLUMNS};
pub use runner::{collect_configs, run_experiment, run_matrix, run_traced, workload};
pub use scenarios::{run_scenario, ScenarioParams, Verdict, SCENARIOS};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}:{}: {message}", line.map_or("?".to_string(), |l| l.to_string()))]
    Parse { path: PathBuf, line: Option<usize>, message: String },
    #[error("invalid config: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("report output: {0}")]
    Output(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
}
