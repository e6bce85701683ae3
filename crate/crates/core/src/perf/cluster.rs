use serde::{Deserialize, Serialize};

use super::{PerfError, Result};

/// Aggregate steps/sec one parameter server can absorb for a given CNN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsCapacity {
    /// Serialized as `null` when unbounded.
    #[serde(with = "unbounded_as_null")]
    pub max_aggregate_steps_per_sec: f64,
}

mod unbounded_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl PsCapacity {
    pub fn new(max_aggregate_steps_per_sec: f64) -> Result<Self> {
        if !(max_aggregate_steps_per_sec > 0.0) {
            return Err(PerfError::InvalidInput(format!(
                "parameter-server capacity must be positive, got {max_aggregate_steps_per_sec}"
            )));
        }
        Ok(Self { max_aggregate_steps_per_sec })
    }

    pub fn unbounded() -> Self {
        Self { max_aggregate_steps_per_sec: f64::INFINITY }
    }

    pub fn is_bounded(&self) -> bool {
        self.max_aggregate_steps_per_sec.is_finite()
    }

    /// Cap for `ps_count` servers.
    pub fn total(&self, ps_count: u32) -> f64 {
        self.max_aggregate_steps_per_sec * f64::from(ps_count)
    }
}

/// min(Σ sp_i, ps_count × cap).
pub fn predict_cluster_speed(worker_speeds: &[f64], ps_count: u32, cap: PsCapacity) -> Result<f64> {
    if ps_count == 0 {
        return Err(PerfError::InvalidInput("at least one parameter server is required".into()));
    }
    if let Some(bad) = worker_speeds.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(PerfError::InvalidInput(format!("worker speeds must be positive, got {bad}")));
    }
    let sum: f64 = worker_speeds.iter().sum();
    Ok(sum.min(cap.total(ps_count)))
}

/// One measured cluster speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterObservation {
    pub gpu_mix: String,
    pub k80_count: u32,
    pub p100_count: u32,
    pub v100_count: u32,
    pub ps_count: u32,
    pub cnn_name: String,
    pub cluster_steps_per_sec: f64,
}

impl ClusterObservation {
    pub fn worker_count(&self) -> u32 {
        self.k80_count + self.p100_count + self.v100_count
    }

    /// Worker counts as [K80, P100, V100].
    pub fn counts(&self) -> [u32; 3] {
        [self.k80_count, self.p100_count, self.v100_count]
    }
}

/// Calibrates the per-server cap for (`cnn`, `ps_count`).
///
/// Single-worker rows give each GPU type's baseline speed. A row is saturated
/// when it falls more than `threshold` (relative) below the sum of its
/// baselines; the cap is the largest per-server speed among saturated rows.
/// Returns [`PsCapacity::unbounded`] when nothing saturates.
pub fn calibrate_ps_capacity(
    rows: &[ClusterObservation],
    cnn: &str,
    ps_count: u32,
    threshold: f64,
) -> Result<PsCapacity> {
    let relevant: Vec<&ClusterObservation> =
        rows.iter().filter(|r| r.cnn_name == cnn && r.ps_count == ps_count).collect();
    if relevant.is_empty() {
        return Err(PerfError::InvalidInput(format!("no cluster rows for {cnn} with {ps_count} parameter server(s)")));
    }
    let mut baseline = [None::<f64>; 3];
    for r in &relevant {
        if r.worker_count() == 1 {
            let g = r.counts().iter().position(|&c| c == 1).unwrap_or(0);
            baseline[g] = Some(r.cluster_steps_per_sec);
        }
    }
    let mut cap: Option<f64> = None;
    for r in &relevant {
        if r.worker_count() < 2 {
            continue;
        }
        let mut expected = 0.0;
        let mut known = true;
        for (g, &c) in r.counts().iter().enumerate() {
            if c > 0 {
                match baseline[g] {
                    Some(b) => expected += b * f64::from(c),
                    None => known = false,
                }
            }
        }
        if known && r.cluster_steps_per_sec < (1.0 - threshold) * expected {
            let per_ps = r.cluster_steps_per_sec / f64::from(ps_count);
            cap = Some(cap.map_or(per_ps, |c| c.max(per_ps)));
        }
    }
    match cap {
        Some(c) => PsCapacity::new(c),
        None => Ok(PsCapacity::unbounded()),
    }
}
