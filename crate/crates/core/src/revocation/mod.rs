//! Empirical models of transient servers: lifetimes, startup stages,
//! replacement overheads and time-of-day revocation counts.

mod hours;
mod lifetime;
mod overhead;

pub use hours::{hour_of_day_histogram, RegionTimezones};
pub use lifetime::{
    build_lifetime_distribution, expected_revocations, prob_revoked_within, LifetimeDistribution, LifetimeSample,
    LifetimeTable, RevocationRecord, Workload, MAX_LIFETIME_SEC,
};
pub use overhead::{
    replacement_overhead, Offering, ReplacementOverhead, ReplacementOverheadModel, StartKind, StartupModel,
    StartupRecord, StartupTable,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RevocationError {
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("no records for {gpu_name} in {region}")]
    EmptyGroup { gpu_name: String, region: String },
    #[error("no startup samples for {0}")]
    EmptyStartupModel(String),
    #[error("no replacement overhead recorded for CNN {0:?}")]
    UnknownCnn(String),
    #[error("no timezone known for region {0:?}")]
    UnknownRegion(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, RevocationError>;
