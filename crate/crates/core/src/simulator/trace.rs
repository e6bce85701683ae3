use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub const TRACE_HEADER: &str = "time_sec,kind,subject";
pub const SPEED_HEADER: &str = "time_sec,steps_per_sec";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Revocation,
    #[serde(rename = "lifetime-cap-24h")]
    LifetimeCap24h,
    CheckpointStart,
    CheckpointEnd,
    ReplacementRequested,
    ReplacementReady,
    ChiefHandover,
    RecomputeRollback,
    TrainingComplete,
}

impl EventKind {
    pub const ALL: [EventKind; 9] = [
        EventKind::Revocation,
        EventKind::LifetimeCap24h,
        EventKind::CheckpointStart,
        EventKind::CheckpointEnd,
        EventKind::ReplacementRequested,
        EventKind::ReplacementReady,
        EventKind::ChiefHandover,
        EventKind::RecomputeRollback,
        EventKind::TrainingComplete,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Revocation => "revocation",
            Self::LifetimeCap24h => "lifetime-cap-24h",
            Self::CheckpointStart => "checkpoint-start",
            Self::CheckpointEnd => "checkpoint-end",
            Self::ReplacementRequested => "replacement-requested",
            Self::ReplacementReady => "replacement-ready",
            Self::ChiefHandover => "chief-handover",
            Self::RecomputeRollback => "recompute-rollback",
            Self::TrainingComplete => "training-complete",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subject {
    Worker(usize),
    Cluster,
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Worker(id) => write!(f, "worker-{id}"),
            Subject::Cluster => f.write_str("cluster"),
        }
    }
}

impl std::str::FromStr for Subject {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "cluster" {
            return Ok(Subject::Cluster);
        }
        s.strip_prefix("worker-")
            .and_then(|id| id.parse().ok())
            .map(Subject::Worker)
            .ok_or_else(|| format!("bad event subject {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub time_sec: f64,
    pub kind: EventKind,
    pub subject: Subject,
}

impl fmt::Display for SimEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6},{},{}", self.time_sec, self.kind, self.subject)
    }
}

/// One trace per line under [`TRACE_HEADER`].
pub fn format_trace(events: &[SimEvent]) -> String {
    let mut out = String::with_capacity(32 * (events.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for e in events {
        let _ = writeln!(out, "{e}");
    }
    out
}

/// Inverse of [`format_trace`]; times come back rounded to microseconds.
pub fn parse_trace(text: &str) -> Result<Vec<SimEvent>, String> {
    let mut events = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if n == 0 && line == TRACE_HEADER || line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let (Some(t), Some(k), Some(s), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(format!("line {}: expected time_sec,kind,subject", n + 1));
        };
        let time_sec = t.parse().map_err(|_| format!("line {}: bad time {t:?}", n + 1))?;
        let kind = EventKind::ALL
            .into_iter()
            .find(|x| x.as_str() == k)
            .ok_or_else(|| format!("line {}: unknown event kind {k:?}", n + 1))?;
        let subject = s.parse().map_err(|e| format!("line {}: {e}", n + 1))?;
        events.push(SimEvent { time_sec, kind, subject });
    }
    Ok(events)
}

/// Measured speed over one window of executed steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedSample {
    pub end_time_sec: f64,
    pub steps_per_sec: f64,
    /// Per worker slot; `None` when the slot was not running the same live
    /// worker for the whole window.
    pub worker_speeds: Vec<Option<f64>>,
}

/// `time_sec,steps_per_sec[,worker_0,...]` lines, empty fields for unknown
/// per-worker speeds.
pub fn format_speed_series(series: &[SpeedSample], with_workers: bool) -> String {
    let slots = if with_workers { series.iter().map(|s| s.worker_speeds.len()).max().unwrap_or(0) } else { 0 };
    let mut out = String::from(SPEED_HEADER);
    for i in 0..slots {
        let _ = write!(out, ",worker_{i}");
    }
    out.push('\n');
    for s in series {
        let _ = write!(out, "{:.6},{}", s.end_time_sec, s.steps_per_sec);
        for i in 0..slots {
            match s.worker_speeds.get(i).copied().flatten() {
                Some(v) => {
                    let _ = write!(out, ",{v}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}
