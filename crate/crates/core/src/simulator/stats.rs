use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ClusterConfig, SimModels};
use super::engine::{replay_revocations, simulate, ScheduledRevocation, SimResult};
use super::Result;

/// Runs `runs` independent simulations, run `i` seeded with `config.seed + i`.
/// Results come back in run order regardless of scheduling.
pub fn simulate_many(config: &ClusterConfig, models: &SimModels, runs: usize) -> Vec<Result<SimResult>> {
    (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut c = config.clone();
            c.seed = config.seed.wrapping_add(i as u64);
            simulate(&c, models)
        })
        .collect()
}

/// Like [`simulate_many`], with every run replaying `schedule` instead of
/// sampling revocations.
pub fn replay_many(
    config: &ClusterConfig,
    models: &SimModels,
    schedule: &[ScheduledRevocation],
    runs: usize,
) -> Vec<Result<SimResult>> {
    (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut c = config.clone();
            c.seed = config.seed.wrapping_add(i as u64);
            replay_revocations(&c, models, schedule)
        })
        .collect()
}

/// Linear-interpolation percentile of sorted data, `q` in [0, 100].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = (q / 100.0).clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

/// Summary of a sample of run totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub runs: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub p5: f64,
    pub p50: f64,
    pub p95: f64,
    pub max: f64,
}

impl RunStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mean = sorted.iter().sum::<f64>() / n;
        let std = (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        Some(Self {
            runs: sorted.len(),
            mean,
            std,
            min: sorted[0],
            p5: percentile(&sorted, 5.0),
            p50: percentile(&sorted, 50.0),
            p95: percentile(&sorted, 95.0),
            max: sorted[sorted.len() - 1],
        })
    }
}
