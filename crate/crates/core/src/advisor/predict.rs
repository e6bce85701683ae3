use serde::{Deserialize, Serialize};

use super::{AdvisorError, Result};
use crate::perf::{predict_cluster_speed, PsCapacity};
use crate::revocation::{expected_revocations, LifetimeDistribution};

/// Inputs of the closed-form estimate.
#[derive(Debug, Clone)]
pub struct PredictionInputs<'a> {
    /// Predicted steps/sec of each worker.
    pub worker_speeds: Vec<f64>,
    pub ps_count: u32,
    pub ps_cap: PsCapacity,
    pub workload_steps: u64,
    pub checkpoint_interval_steps: u64,
    /// T_c
    pub checkpoint_sec: f64,
    /// T_p
    pub startup_sec: f64,
    /// T_s
    pub replacement_sec: f64,
    /// One per worker, or `None` to assume no revocations.
    pub lifetimes: Option<Vec<&'a LifetimeDistribution>>,
    /// Query the CDFs again at the first estimate of T.
    pub refine: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionComponents {
    pub compute_sec: f64,
    pub checkpoint_sec: f64,
    pub revocation_sec: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub total_time_sec: f64,
    pub speed_steps_per_sec: f64,
    pub expected_revocations: f64,
    pub checkpoint_count: u64,
    /// Revocation-free duration the CDFs were queried at.
    pub query_duration_sec: f64,
    pub components: PredictionComponents,
}

/// ⌈N_w / I_c⌉
pub fn checkpoint_count(workload_steps: u64, checkpoint_interval_steps: u64) -> u64 {
    workload_steps.div_ceil(checkpoint_interval_steps)
}

/// T = N_w/sp + ⌈N_w/I_c⌉·T_c + N_r·(T_p + T_s), with N_r = Σ Pr(R_i) taken
/// at the revocation-free duration.
pub fn predict_training_time(inputs: &PredictionInputs<'_>) -> Result<Prediction> {
    if inputs.workload_steps == 0 || inputs.checkpoint_interval_steps == 0 {
        return Err(AdvisorError::InvalidInput("N_w and I_c must be positive".into()));
    }
    for (name, v) in [
        ("checkpoint time", inputs.checkpoint_sec),
        ("startup time", inputs.startup_sec),
        ("replacement overhead", inputs.replacement_sec),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(AdvisorError::InvalidInput(format!("{name} must be nonnegative, got {v}")));
        }
    }
    if let Some(l) = &inputs.lifetimes {
        if l.len() != inputs.worker_speeds.len() {
            return Err(AdvisorError::InvalidInput(format!(
                "{} lifetime distributions for {} workers",
                l.len(),
                inputs.worker_speeds.len()
            )));
        }
    }
    if inputs.worker_speeds.is_empty() {
        return Err(AdvisorError::ZeroSpeed);
    }
    let sp = predict_cluster_speed(&inputs.worker_speeds, inputs.ps_count, inputs.ps_cap)?;
    if !(sp > 0.0) {
        return Err(AdvisorError::ZeroSpeed);
    }
    let n_c = checkpoint_count(inputs.workload_steps, inputs.checkpoint_interval_steps);
    let compute_sec = inputs.workload_steps as f64 / sp;
    let checkpoint_sec = n_c as f64 * inputs.checkpoint_sec;
    let d0 = compute_sec + checkpoint_sec;
    let per_revocation = inputs.startup_sec + inputs.replacement_sec;
    let n_r_at = |d: f64| inputs.lifetimes.as_ref().map_or(0.0, |l| expected_revocations(l, d));

    let mut query = d0;
    let mut n_r = n_r_at(d0);
    if inputs.refine {
        query = d0 + n_r * per_revocation;
        n_r = n_r_at(query);
    }
    let revocation_sec = n_r * per_revocation;
    Ok(Prediction {
        total_time_sec: compute_sec + checkpoint_sec + revocation_sec,
        speed_steps_per_sec: sp,
        expected_revocations: n_r,
        checkpoint_count: n_c,
        query_duration_sec: query,
        components: PredictionComponents { compute_sec, checkpoint_sec, revocation_sec },
    })
}
