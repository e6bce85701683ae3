use serde::{Deserialize, Serialize};

use super::detect::{BottleneckAlert, Classification};
use super::{AdvisorError, Result};
use crate::perf::PsCapacity;

/// Restarting training with another parameter server costs about this long.
pub const RESTART_OVERHEAD_SEC: f64 = 10.0;

/// Largest speedup observed from adding a parameter server. Projections are
/// clamped to it rather than promising more.
pub const MAX_OBSERVED_SPEEDUP: f64 = 0.706;

#[derive(Debug, Clone, PartialEq)]
pub struct MitigationContext {
    pub ps_count: u32,
    /// Predicted steps/sec of each worker.
    pub worker_speeds: Vec<f64>,
    /// Unbounded means uncalibrated; the measured speed is then taken as the
    /// current aggregate cap.
    pub ps_cap: PsCapacity,
    pub remaining_steps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mitigation {
    pub recommended_ps_count: u32,
    pub restart_overhead_sec: f64,
    pub measured_speed: f64,
    pub projected_speed: f64,
    pub projected_improvement_fraction: f64,
    pub remaining_time_current_sec: f64,
    pub remaining_time_mitigated_sec: f64,
    pub net_saving_sec: f64,
    /// False when the restart costs more than it saves.
    pub restart_worthwhile: bool,
    pub text: String,
}

/// Proposes one more parameter server for a parameter-server alert.
pub fn recommend_mitigation(alert: &BottleneckAlert, ctx: &MitigationContext) -> Result<Mitigation> {
    if alert.classification != Classification::ParameterServer {
        return Err(AdvisorError::NoPsRemedy(format!(
            "the alert is classified {}, and adding parameter servers only lifts a parameter-server cap",
            alert.classification.as_str()
        )));
    }
    if ctx.ps_count == 0 {
        return Err(AdvisorError::InvalidInput("ps_count must be at least 1".into()));
    }
    if !(ctx.remaining_steps >= 0.0) {
        return Err(AdvisorError::InvalidInput(format!(
            "remaining steps must be nonnegative, got {}",
            ctx.remaining_steps
        )));
    }
    let measured = alert.measured_speed;
    if !(measured > 0.0) {
        return Err(AdvisorError::ZeroSpeed);
    }
    let sum: f64 = ctx.worker_speeds.iter().sum();
    let per_ps = if ctx.ps_cap.is_bounded() {
        ctx.ps_cap.max_aggregate_steps_per_sec
    } else {
        measured / f64::from(ctx.ps_count)
    };
    let next = ctx.ps_count + 1;
    let projected = sum.min(per_ps * f64::from(next)).min(measured * (1.0 + MAX_OBSERVED_SPEEDUP)).max(measured);
    let current_sec = ctx.remaining_steps / measured;
    let mitigated_sec = ctx.remaining_steps / projected + RESTART_OVERHEAD_SEC;
    let net = current_sec - mitigated_sec;
    let worthwhile = net > 0.0;
    let improvement = projected / measured - 1.0;
    let text = if worthwhile {
        format!(
            "restart with {next} parameter servers: projected {projected:.2} steps/s (+{:.1}%), \
             saving about {net:.0} s on the remaining {:.0} steps after a {RESTART_OVERHEAD_SEC:.0} s restart",
            100.0 * improvement,
            ctx.remaining_steps
        )
    } else {
        format!(
            "keep {} parameter server(s): a {RESTART_OVERHEAD_SEC:.0} s restart would cost {:.0} s more than \
             it saves on the remaining {:.0} steps",
            ctx.ps_count, -net, ctx.remaining_steps
        )
    };
    Ok(Mitigation {
        recommended_ps_count: next,
        restart_overhead_sec: RESTART_OVERHEAD_SEC,
        measured_speed: measured,
        projected_speed: projected,
        projected_improvement_fraction: improvement,
        remaining_time_current_sec: current_sec,
        remaining_time_mitigated_sec: mitigated_sec,
        net_saving_sec: net,
        restart_worthwhile: worthwhile,
        text,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alert(class: Classification, measured: f64) -> BottleneckAlert {
        BottleneckAlert {
            detected_at_sec: 40.0,
            predicted_speed: 56.88,
            measured_speed: measured,
            deficit_fraction: 1.0 - measured / 56.88,
            classification: class,
            straggler_slot: None,
            worker_deficits: vec![],
            recommendation: String::new(),
            mitigation_overhead_sec: None,
        }
    }

    fn ctx(remaining: f64) -> MitigationContext {
        MitigationContext {
            ps_count: 1,
            worker_speeds: vec![9.48; 6],
            ps_cap: PsCapacity::new(41.7275).unwrap(),
            remaining_steps: remaining,
        }
    }

    #[test]
    fn second_ps_lifts_the_cap() {
        let m = recommend_mitigation(&alert(Classification::ParameterServer, 41.7275), &ctx(60_000.0)).unwrap();
        assert_eq!(m.recommended_ps_count, 2);
        assert!((m.projected_speed - 56.88).abs() < 1e-9);
        assert!(m.projected_improvement_fraction <= MAX_OBSERVED_SPEEDUP);
        assert!(m.restart_worthwhile);
        assert!((m.net_saving_sec - (60_000.0 / 41.7275 - 60_000.0 / 56.88 - 10.0)).abs() < 1e-9);
    }

    #[test]
    fn small_remainder_not_worth_restart() {
        let m = recommend_mitigation(&alert(Classification::ParameterServer, 41.7275), &ctx(100.0)).unwrap();
        assert!(!m.restart_worthwhile);
        assert!(m.net_saving_sec < 0.0);
        assert!(m.text.starts_with("keep 1"));
    }

    #[test]
    fn straggler_has_no_ps_remedy() {
        let err = recommend_mitigation(&alert(Classification::StragglerWorker, 41.0), &ctx(1000.0)).unwrap_err();
        assert!(matches!(err, AdvisorError::NoPsRemedy(_)));
    }

    #[test]
    fn speedup_is_clamped() {
        let mut c = ctx(60_000.0);
        c.worker_speeds = vec![9.48; 20];
        c.ps_cap = PsCapacity::unbounded();
        let m = recommend_mitigation(&alert(Classification::ParameterServer, 40.0), &c).unwrap();
        assert!((m.projected_speed - 40.0 * 1.706).abs() < 1e-9);
    }
}
