use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Result, SimError};
use crate::perf::{CnnModel, PsCapacity};
use crate::revocation::{
    replacement_overhead, LifetimeTable, Offering, ReplacementOverheadModel, StartKind, StartupModel, StartupTable,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WorkerSpec {
    pub gpu_name: String,
    pub region: String,
}

impl WorkerSpec {
    pub fn new(gpu_name: &str, region: &str) -> Self {
        Self { gpu_name: gpu_name.into(), region: region.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChiefMode {
    /// A surviving worker takes over checkpointing at no cost.
    #[default]
    CmdareHandover,
    /// The replacement reuses the chief's identity and training restarts
    /// from the last checkpoint.
    LegacyIpReuse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReplacementPolicy {
    None,
    #[default]
    ImmediateSameGpu,
    /// Uses `ClusterConfig::replacement_worker`.
    ImmediateSpecifiedGpu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckpointStall {
    /// Only the checkpointing worker stops contributing while it writes.
    #[default]
    ChiefPause,
    /// The whole cluster stops while a checkpoint is written.
    FullStop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimOptions {
    pub checkpoint_stall: CheckpointStall,
    /// Also write a checkpoint at completion when N_w is not a multiple of I_c.
    pub final_checkpoint: bool,
    /// When false, replacement workers are never revoked (not even by the
    /// 24 h cap).
    pub replacement_revocations: bool,
    /// Stretches startup samples of replacements around their mean.
    pub startup_variance_multiplier: f64,
    pub speed_window_steps: u64,
    /// Sigma of a mean-one lognormal factor applied to each worker's speed
    /// when it starts. Off when `None`.
    pub speed_jitter_sigma: Option<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            checkpoint_stall: CheckpointStall::ChiefPause,
            final_checkpoint: false,
            replacement_revocations: true,
            startup_variance_multiplier: 1.0,
            speed_window_steps: 100,
            speed_jitter_sigma: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub workers: Vec<WorkerSpec>,
    pub ps_count: u32,
    pub cnn: CnnModel,
    pub workload_steps: u64,
    pub checkpoint_interval_steps: u64,
    #[serde(default)]
    pub chief_mode: ChiefMode,
    #[serde(default)]
    pub replacement_policy: ReplacementPolicy,
    #[serde(default)]
    pub replacement_worker: Option<WorkerSpec>,
    pub seed: u64,
    #[serde(default)]
    pub options: SimOptions,
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SimError::Config(m));
        if self.workers.is_empty() {
            return bad("at least one worker is required".into());
        }
        if self.ps_count == 0 {
            return bad("ps_count must be at least 1".into());
        }
        if self.workload_steps == 0 {
            return bad("workload_steps must be positive".into());
        }
        if self.checkpoint_interval_steps == 0 {
            return bad("checkpoint_interval_steps must be positive".into());
        }
        if self.replacement_policy == ReplacementPolicy::ImmediateSpecifiedGpu && self.replacement_worker.is_none() {
            return bad("replacement policy immediate-specified-gpu needs replacement_worker".into());
        }
        let o = &self.options;
        if o.speed_window_steps == 0 {
            return bad("speed_window_steps must be positive".into());
        }
        if !(o.startup_variance_multiplier >= 0.0 && o.startup_variance_multiplier.is_finite()) {
            return bad(format!(
                "startup_variance_multiplier must be nonnegative, got {}",
                o.startup_variance_multiplier
            ));
        }
        if let Some(s) = o.speed_jitter_sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return bad(format!("speed_jitter_sigma must be nonnegative, got {s}"));
            }
        }
        Ok(())
    }

    /// The worker type a replacement for `original` gets.
    pub fn replacement_for(&self, original: &WorkerSpec) -> Option<WorkerSpec> {
        match self.replacement_policy {
            ReplacementPolicy::None => None,
            ReplacementPolicy::ImmediateSameGpu => Some(original.clone()),
            ReplacementPolicy::ImmediateSpecifiedGpu => self.replacement_worker.clone(),
        }
    }
}

/// Where replacement startup times (T_p) come from.
#[derive(Debug, Clone, PartialEq)]
pub enum StartupSource {
    Fixed(f64),
    Table(StartupTable),
}

/// Where replacement framework overheads (T_s) come from.
#[derive(Debug, Clone, PartialEq)]
pub enum OverheadSource {
    Fixed(f64),
    Model(ReplacementOverheadModel),
}

/// Resolved model inputs for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SimModels {
    /// Steps/sec of one worker of each GPU type, for the scenario's CNN.
    pub worker_speeds: BTreeMap<String, f64>,
    /// T_c in seconds.
    pub checkpoint_sec: f64,
    pub lifetimes: LifetimeTable,
    pub startup: StartupSource,
    pub replacement: OverheadSource,
    pub ps_cap: PsCapacity,
}

impl SimModels {
    pub(crate) fn speed_of(&self, gpu_name: &str) -> Result<f64> {
        match self.worker_speeds.get(gpu_name) {
            Some(&s) if s > 0.0 && s.is_finite() => Ok(s),
            Some(&s) => Err(SimError::Config(format!("worker speed for {gpu_name} must be positive, got {s}"))),
            None => Err(SimError::Coverage(format!("no worker speed for GPU {gpu_name}"))),
        }
    }

    pub(crate) fn startup_model(&self, w: &WorkerSpec) -> Result<Option<StartupModel>> {
        match &self.startup {
            StartupSource::Fixed(_) => Ok(None),
            StartupSource::Table(t) => t
                .lookup(&w.gpu_name, &w.region, Offering::Transient)
                .map(Some)
                .map_err(|_| SimError::Coverage(format!("no startup model for {}/{}", w.gpu_name, w.region))),
        }
    }

    pub(crate) fn overhead_sec(&self, cnn: &str) -> Result<f64> {
        match &self.replacement {
            OverheadSource::Fixed(s) => Ok(*s),
            OverheadSource::Model(m) => replacement_overhead(m, cnn, StartKind::Cold)
                .map_err(|_| SimError::Coverage(format!("no replacement overhead for CNN {cnn}"))),
        }
    }

    pub(crate) fn check_lifetimes(&self, w: &WorkerSpec) -> Result<()> {
        self.lifetimes
            .get(&w.gpu_name, &w.region)
            .map(|_| ())
            .ok_or_else(|| SimError::Coverage(format!("no lifetime distribution for {}/{}", w.gpu_name, w.region)))
    }
}
