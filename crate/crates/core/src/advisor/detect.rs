use serde::{Deserialize, Serialize};

use super::mitigate::RESTART_OVERHEAD_SEC;
use super::{AdvisorError, Result};
use crate::simulator::SpeedSample;

pub const DEFAULT_THRESHOLD: f64 = 0.067;
pub const DEFAULT_WARMUP_SEC: f64 = 30.0;

/// Deficits must beat the threshold by more than this to count, so a stream
/// at exactly (1 - threshold) of prediction never alerts.
const STRICT_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlertMode {
    /// Compare each window on its own.
    #[default]
    PerWindow,
    /// Compare the mean of all post-warmup windows so far.
    RunningMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub threshold: f64,
    pub warmup_sec: f64,
    pub mode: AlertMode,
    /// Consecutive violating windows needed to alert.
    pub debounce_windows: u32,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            warmup_sec: DEFAULT_WARMUP_SEC,
            mode: AlertMode::PerWindow,
            debounce_windows: 2,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(AdvisorError::InvalidInput(format!("threshold must be in (0, 1), got {}", self.threshold)));
        }
        if !(self.warmup_sec >= 0.0 && self.warmup_sec.is_finite()) {
            return Err(AdvisorError::InvalidInput(format!("warmup must be nonnegative, got {}", self.warmup_sec)));
        }
        if self.debounce_windows == 0 {
            return Err(AdvisorError::InvalidInput("debounce_windows must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    ParameterServer,
    StragglerWorker,
    Unclassified,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ParameterServer => "parameter-server",
            Self::StragglerWorker => "straggler-worker",
            Self::Unclassified => "unclassified",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BottleneckAlert {
    pub detected_at_sec: f64,
    pub predicted_speed: f64,
    pub measured_speed: f64,
    pub deficit_fraction: f64,
    pub classification: Classification,
    /// The lagging worker slot for straggler alerts.
    pub straggler_slot: Option<usize>,
    /// (predicted - measured) / predicted per worker slot, where known.
    pub worker_deficits: Vec<Option<f64>>,
    pub recommendation: String,
    pub mitigation_overhead_sec: Option<f64>,
}

/// Incremental detector over a speed stream.
#[derive(Debug, Clone)]
pub struct Detector {
    predicted: f64,
    worker_predicted: Option<Vec<f64>>,
    config: DetectorConfig,
    consecutive: u32,
    armed: bool,
    sum: f64,
    seen: usize,
    last_time: Option<f64>,
}

impl Detector {
    /// `worker_predicted` enables classification; it is indexed by worker slot.
    pub fn new(predicted: f64, worker_predicted: Option<Vec<f64>>, config: DetectorConfig) -> Result<Self> {
        config.validate()?;
        if !(predicted > 0.0 && predicted.is_finite()) {
            return Err(AdvisorError::ZeroSpeed);
        }
        if let Some(bad) = worker_predicted.iter().flatten().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(AdvisorError::InvalidInput(format!("per-worker predictions must be positive, got {bad}")));
        }
        Ok(Self {
            predicted,
            worker_predicted,
            config,
            consecutive: 0,
            armed: true,
            sum: 0.0,
            seen: 0,
            last_time: None,
        })
    }

    /// Post-warmup samples seen so far.
    pub fn samples_seen(&self) -> usize {
        self.seen
    }

    /// Feeds one window. After an alert the detector re-arms once a window
    /// is back within the threshold.
    pub fn observe(&mut self, sample: &SpeedSample) -> Result<Option<BottleneckAlert>> {
        if let Some(prev) = self.last_time {
            if !(sample.end_time_sec > prev) {
                return Err(AdvisorError::InvalidInput(format!(
                    "stream timestamps must increase: {} after {prev}",
                    sample.end_time_sec
                )));
            }
        }
        self.last_time = Some(sample.end_time_sec);
        if sample.end_time_sec < self.config.warmup_sec {
            return Ok(None);
        }
        self.seen += 1;
        self.sum += sample.steps_per_sec;
        let measured = match self.config.mode {
            AlertMode::PerWindow => sample.steps_per_sec,
            AlertMode::RunningMean => self.sum / self.seen as f64,
        };
        let deficit = (self.predicted - measured) / self.predicted;
        if deficit - self.config.threshold <= STRICT_MARGIN {
            self.consecutive = 0;
            self.armed = true;
            return Ok(None);
        }
        self.consecutive += 1;
        if !self.armed || self.consecutive < self.config.debounce_windows {
            return Ok(None);
        }
        self.armed = false;
        Ok(Some(self.alert(sample, measured, deficit)))
    }

    fn alert(&self, sample: &SpeedSample, measured: f64, deficit: f64) -> BottleneckAlert {
        let thr = self.config.threshold;
        let worker_deficits: Vec<Option<f64>> = match &self.worker_predicted {
            Some(pred) => pred
                .iter()
                .enumerate()
                .map(|(i, p)| sample.worker_speeds.get(i).copied().flatten().map(|m| (p - m) / p))
                .collect(),
            None => Vec::new(),
        };
        let known: Vec<(usize, f64)> =
            worker_deficits.iter().enumerate().filter_map(|(i, d)| d.map(|d| (i, d))).collect();
        let complete = !known.is_empty() && known.len() == worker_deficits.len();

        let (classification, straggler_slot) = if known.is_empty() {
            (Classification::Unclassified, None)
        } else {
            let (max_slot, max_d) =
                known.iter().copied().fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
            let min_d = known.iter().map(|k| k.1).fold(f64::INFINITY, f64::min);
            let each_within = known.iter().all(|k| k.1 - thr <= STRICT_MARGIN);
            if max_d - min_d - thr > STRICT_MARGIN && max_d - thr > STRICT_MARGIN {
                (Classification::StragglerWorker, Some(max_slot))
            } else if each_within && !complete {
                // A missing worker explains the gap as well as the servers do.
                (Classification::Unclassified, None)
            } else {
                (Classification::ParameterServer, None)
            }
        };
        let pct = 100.0 * deficit;
        let (recommendation, mitigation_overhead_sec) = match classification {
            Classification::ParameterServer => (
                format!(
                    "every worker slows evenly, {pct:.1}% below prediction, so the parameter \
                     servers are saturated; add a parameter server (restart costs about {RESTART_OVERHEAD_SEC:.0} s)"
                ),
                Some(RESTART_OVERHEAD_SEC),
            ),
            Classification::StragglerWorker => (
                format!(
                    "worker slot {} lags its prediction by {:.1}%; replace that worker",
                    straggler_slot.unwrap_or(0),
                    100.0 * worker_deficits[straggler_slot.unwrap_or(0)].unwrap_or(0.0)
                ),
                None,
            ),
            Classification::Unclassified => {
                (format!("cluster runs {pct:.1}% below prediction; per-worker data does not isolate a cause"), None)
            }
        };
        BottleneckAlert {
            detected_at_sec: sample.end_time_sec,
            predicted_speed: self.predicted,
            measured_speed: measured,
            deficit_fraction: deficit,
            classification,
            straggler_slot,
            worker_deficits,
            recommendation,
            mitigation_overhead_sec,
        }
    }
}

/// First alert on `stream`, if any.
pub fn detect(
    predicted_speed: f64,
    worker_predicted: Option<Vec<f64>>,
    stream: &[SpeedSample],
    config: &DetectorConfig,
) -> Result<Option<BottleneckAlert>> {
    let mut d = Detector::new(predicted_speed, worker_predicted, config.clone())?;
    for s in stream {
        if let Some(alert) = d.observe(s)? {
            return Ok(Some(alert));
        }
    }
    if d.samples_seen() == 0 {
        return Err(AdvisorError::EmptyStream { warmup_sec: config.warmup_sec });
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn steady(speed: f64, workers: Vec<Option<f64>>, n: usize) -> Vec<SpeedSample> {
        (1..=n)
            .map(|i| SpeedSample {
                end_time_sec: 10.0 * i as f64,
                steps_per_sec: speed,
                worker_speeds: workers.clone(),
            })
            .collect()
    }

    #[test]
    fn ten_percent_deficit_alerts() {
        let a = detect(10.0, None, &steady(9.0, vec![], 10), &DetectorConfig::default()).unwrap().unwrap();
        assert!((a.deficit_fraction - 0.1).abs() < 1e-12);
        // Windows at 30 and 40 s are the first two after warmup.
        assert_eq!(a.detected_at_sec, 40.0);
        assert_eq!(a.classification, Classification::Unclassified);
    }

    #[test]
    fn within_threshold_is_quiet() {
        let cfg = DetectorConfig::default();
        assert!(detect(10.0, None, &steady(9.5, vec![], 10), &cfg).unwrap().is_none());
        assert!(detect(10.0, None, &steady(10.0, vec![], 10), &cfg).unwrap().is_none());
        assert!(detect(10.0, None, &steady(9.33, vec![], 10), &cfg).unwrap().is_none());
    }

    #[test]
    fn one_good_window_clears_pending_alert() {
        let mut s = steady(9.0, vec![], 10);
        for (i, x) in s.iter_mut().enumerate() {
            if i % 2 == 0 {
                x.steps_per_sec = 10.0;
            }
        }
        assert!(detect(10.0, None, &s, &DetectorConfig::default()).unwrap().is_none());
        let mean = DetectorConfig { mode: AlertMode::RunningMean, ..DetectorConfig::default() };
        assert!(detect(10.0, None, &s, &mean).unwrap().is_none());
    }

    #[test]
    fn classifies_uniform_and_single_deficits() {
        let pred = Some(vec![5.0, 5.0]);
        let cfg = DetectorConfig::default();
        let ps = detect(10.0, pred.clone(), &steady(8.0, vec![Some(4.0), Some(4.0)], 6), &cfg).unwrap().unwrap();
        assert_eq!(ps.classification, Classification::ParameterServer);
        assert_eq!(ps.mitigation_overhead_sec, Some(10.0));
        let st = detect(10.0, pred.clone(), &steady(8.0, vec![Some(5.0), Some(3.0)], 6), &cfg).unwrap().unwrap();
        assert_eq!(st.classification, Classification::StragglerWorker);
        assert_eq!(st.straggler_slot, Some(1));
        let missing = detect(10.0, pred, &steady(5.0, vec![Some(5.0), None], 6), &cfg).unwrap().unwrap();
        assert_eq!(missing.classification, Classification::Unclassified);
    }

    #[test]
    fn empty_after_warmup_is_an_error() {
        let err = detect(10.0, None, &steady(9.0, vec![], 2), &DetectorConfig::default()).unwrap_err();
        assert!(matches!(err, AdvisorError::EmptyStream { .. }));
    }

    #[test]
    fn non_increasing_time_rejected() {
        let mut s = steady(9.0, vec![], 4);
        s[2].end_time_sec = 5.0;
        assert!(detect(10.0, None, &s, &DetectorConfig::default()).is_err());
    }
}
