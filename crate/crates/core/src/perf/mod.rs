//! Step-time and checkpoint-time models built on [`crate::regression`], and
//! cluster speed composition under a parameter-server cap.

mod checkpoint;
mod cluster;
mod specs;
mod step_time;

pub use checkpoint::{
    evaluate_checkpoint_variant, fit_checkpoint_model, predict_checkpoint_time, CheckpointFiles, CheckpointObservation,
    CheckpointTimeModel, CheckpointVariant,
};
pub use cluster::{calibrate_ps_capacity, predict_cluster_speed, ClusterObservation, PsCapacity};
pub use specs::{computation_ratio, CnnModel, GpuSpec, FLOPS_PER_GFLOP, FLOPS_PER_TFLOP};
pub use step_time::{
    evaluate_step_time_variant, fit_step_time_model, predict_step_time, predict_worker_speed, FitOptions, FitReport,
    InnerModel, StepObservation, StepTimeModel, StepTimeVariant,
};

use thiserror::Error;

use crate::regression::RegressionError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PerfError {
    #[error(transparent)]
    Regression(#[from] RegressionError),
    #[error("variant {variant} needs observations from a single GPU, found {found:?}")]
    MixedGpus { variant: String, found: Vec<String> },
    #[error("model is scoped to GPU {expected}, asked to predict for {got}")]
    GpuScope { expected: String, got: String },
    #[error("model extrapolates to a non-positive {quantity} ({value}) for {subject}")]
    Extrapolation { quantity: &'static str, value: f64, subject: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, PerfError>;
