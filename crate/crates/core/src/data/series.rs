//! Plot-ready CSV series. Rendering is left to external tools.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::perf::{ClusterObservation, PsCapacity};
use crate::revocation::{LifetimeTable, StartupTable, MAX_LIFETIME_SEC};

pub const LIFETIME_CDF_HEADER: &str = "gpu_name,region,hours,cdf";
pub const REVOCATION_HOURS_HEADER: &str = "gpu_name,hour,revocations";
pub const STARTUP_BREAKDOWN_HEADER: &str =
    "gpu_name,region,offering,samples,provisioning_sec,staging_sec,running_sec,total_sec";
pub const CLUSTER_SPEED_HEADER: &str =
    "gpu_mix,k80_count,p100_count,v100_count,ps_count,cnn_name,workers,observed_steps_per_sec,predicted_steps_per_sec";

/// Empirical CDF of every distribution at `step_hours` spacing up to 24 h.
pub fn lifetime_cdf_csv(table: &LifetimeTable, step_hours: f64) -> String {
    let mut out = format!("{LIFETIME_CDF_HEADER}\n");
    let steps = (MAX_LIFETIME_SEC / 3600.0 / step_hours).round() as usize;
    for d in table.iter() {
        for i in 0..=steps {
            let hours = i as f64 * step_hours;
            let _ = writeln!(out, "{},{},{hours},{}", d.gpu_name, d.region, d.cdf(hours * 3600.0));
        }
    }
    out
}

pub fn revocation_hours_csv(hours: &BTreeMap<String, Vec<u32>>) -> String {
    let mut out = format!("{REVOCATION_HOURS_HEADER}\n");
    for (gpu, counts) in hours {
        for (h, c) in counts.iter().enumerate() {
            let _ = writeln!(out, "{gpu},{h},{c}");
        }
    }
    out
}

/// Mean stage durations per (GPU, region, offering).
pub fn startup_breakdown_csv(table: &StartupTable) -> String {
    let mut out = format!("{STARTUP_BREAKDOWN_HEADER}\n");
    for m in table.iter() {
        let n = m.samples().len() as f64;
        let mut mean = [0.0; 3];
        for s in m.samples() {
            for (acc, v) in mean.iter_mut().zip(s) {
                *acc += v / n;
            }
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            m.gpu_name,
            m.region,
            m.offering,
            m.samples().len(),
            mean[0],
            mean[1],
            mean[2],
            m.mean_total()
        );
    }
    out
}

/// Observed cluster speeds next to min(Σ baselines, cap), where the
/// baselines are the single-worker rows of the same CNN and PS count.
pub fn cluster_speed_csv(rows: &[ClusterObservation], capacities: &BTreeMap<String, PsCapacity>) -> String {
    let mut out = format!("{CLUSTER_SPEED_HEADER}\n");
    for r in rows {
        let mut expected = Some(0.0);
        for (g, &c) in r.counts().iter().enumerate() {
            if c == 0 {
                continue;
            }
            let baseline = rows.iter().find(|b| {
                b.cnn_name == r.cnn_name && b.ps_count == r.ps_count && b.worker_count() == 1 && b.counts()[g] == 1
            });
            expected = match (expected, baseline) {
                (Some(e), Some(b)) => Some(e + b.cluster_steps_per_sec * f64::from(c)),
                _ => None,
            };
        }
        let cap = capacities
            .get(&super::ModelBundle::capacity_key(&r.cnn_name, r.ps_count))
            .copied()
            .unwrap_or_else(PsCapacity::unbounded);
        let predicted = expected.map(|e| e.min(cap.total(r.ps_count)).to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.gpu_mix,
            r.k80_count,
            r.p100_count,
            r.v100_count,
            r.ps_count,
            r.cnn_name,
            r.worker_count(),
            r.cluster_steps_per_sec,
            predicted
        );
    }
    out
}
