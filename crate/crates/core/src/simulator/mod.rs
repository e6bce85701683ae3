//! Event-driven simulation of asynchronous parameter-server training on
//! transient workers.
//!
//! Progress is fluid: the cluster accrues fractional steps at the
//! PS-capped sum of worker speeds, and events are only scheduled where that
//! rate or the cluster state changes.

mod config;
mod engine;
mod stats;
mod trace;

pub use config::{
    CheckpointStall, ChiefMode, ClusterConfig, OverheadSource, ReplacementPolicy, SimModels, SimOptions, StartupSource,
    WorkerSpec,
};
pub use engine::{
    measured_speed, replay_revocations, simulate, Breakdown, EndReason, RevocationTarget, ScheduledRevocation,
    SimResult, WorkerSummary,
};
pub use stats::{percentile, replay_many, simulate_many, RunStats};
pub use trace::{
    format_speed_series, format_trace, parse_trace, EventKind, SimEvent, SpeedSample, Subject, SPEED_HEADER,
    TRACE_HEADER,
};

use thiserror::Error;

use crate::perf::PerfError;
use crate::revocation::RevocationError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Coverage(String),
    #[error("schedule references unknown worker {worker} at t = {time_sec} s")]
    UnknownWorker { worker: usize, time_sec: f64 },
    #[error(
        "training stalled at t = {time_sec:.3} s with {completed_steps:.0} of {target_steps} steps: \
         no live or pending workers"
    )]
    Stall { time_sec: f64, completed_steps: f64, target_steps: u64, trace: Vec<SimEvent> },
    #[error(transparent)]
    Revocation(#[from] RevocationError),
    #[error(transparent)]
    Perf(#[from] PerfError),
}

pub type Result<T> = std::result::Result<T, SimError>;
