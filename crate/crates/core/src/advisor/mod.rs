//! Closed-form training-time prediction and online bottleneck detection.

mod average;
mod detect;
mod mitigate;
mod predict;

pub use average::{RunningAverage, DEFAULT_HALF_LIFE};
pub use detect::{
    detect, AlertMode, BottleneckAlert, Classification, Detector, DetectorConfig, DEFAULT_THRESHOLD, DEFAULT_WARMUP_SEC,
};
pub use mitigate::{recommend_mitigation, Mitigation, MitigationContext, MAX_OBSERVED_SPEEDUP, RESTART_OVERHEAD_SEC};
pub use predict::{checkpoint_count, predict_training_time, Prediction, PredictionComponents, PredictionInputs};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdvisorError {
    #[error("predicted cluster speed is zero")]
    ZeroSpeed,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no speed samples after the {warmup_sec} s warmup")]
    EmptyStream { warmup_sec: f64 },
    #[error("no parameter-server remedy applies: {0}")]
    NoPsRemedy(String),
    #[error(transparent)]
    Perf(#[from] crate::perf::PerfError),
}

pub type Result<T> = std::result::Result<T, AdvisorError>;
