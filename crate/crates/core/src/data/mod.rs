//! Measurement CSV ingestion, the persisted model bundle, scenario files
//! and speed streams.

mod bundle;
mod csv_io;
mod scenario;
mod series;
mod stream;

pub use bundle::{sha256_hex, ModelBundle, SourceDigest, FORMAT_VERSION};
pub use csv_io::{
    parse_checkpoints, parse_cluster_speeds, parse_replacement, parse_revocations, parse_startups, parse_step_times,
    read_checkpoints, read_cluster_speeds, read_replacement, read_revocations, read_startups, read_step_times,
    CHECKPOINT_HEADER, CLUSTER_HEADER, REPLACEMENT_HEADER, REVOCATION_HEADER, STARTUP_HEADER, STEP_TIME_HEADER,
};
pub use scenario::{CapChoice, ModelChoices, NamedCap, ResolvedScenario, Scenario, WorkerGroup};
pub use series::{
    cluster_speed_csv, lifetime_cdf_csv, revocation_hours_csv, startup_breakdown_csv, CLUSTER_SPEED_HEADER,
    LIFETIME_CDF_HEADER, REVOCATION_HOURS_HEADER, STARTUP_BREAKDOWN_HEADER,
};
pub use stream::parse_speed_stream;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{source_name}:{line}: {message}")]
    Schema { source_name: String, line: u64, message: String },
    #[error("bundle: {0}")]
    Bundle(String),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("{0}")]
    Coverage(String),
    #[error(transparent)]
    Perf(#[from] crate::perf::PerfError),
    #[error(transparent)]
    Revocation(#[from] crate::revocation::RevocationError),
}

pub type Result<T> = std::result::Result<T, DataError>;

pub(crate) fn read_text(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| DataError::Io { path: path.display().to_string(), message: e.to_string() })
}
