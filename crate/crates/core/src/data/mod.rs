//! Scenario ingestion and synthetic profile generation.

mod kv;
mod profile;
mod scenario;
mod series_io;

use thiserror::Error;

use crate::env::EnvError;

pub use kv::parse_kv;
pub use profile::{generate_series, Band, DemandShape, ProfileSpec};
pub use scenario::{load_scenario, scenario_fingerprint, ScenarioConfig, SeriesSource};
pub use series_io::{load_series, parse_series, save_series, write_series, SERIES_HEADER};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("series file is empty")]
    EmptySeries,
    #[error("series file is missing columns: {0}")]
    MissingColumns(String),
    #[error("series header must be `t,p_e,p_g,p_o,demand_e,demand_g,demand_h,pv`, found `{0}`")]
    BadHeader(String),
    #[error("line {line}: {reason}")]
    Row { line: usize, reason: String },
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("invalid profile: {0}")]
    InvalidSpec(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Invalid(#[from] EnvError),
}
