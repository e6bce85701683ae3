use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use super::config::{CheckpointStall, ChiefMode, ClusterConfig, SimModels, StartupSource, WorkerSpec};
use super::trace::{EventKind, SimEvent, SpeedSample, Subject};
use super::{Result, SimError};
use crate::revocation::{LifetimeSample, StartupModel, MAX_LIFETIME_SEC};

/// Progress within this many steps of a boundary counts as on it.
const STEP_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RevocationTarget {
    Worker(usize),
    /// Whichever worker is chief when the revocation fires; ignored if none.
    Chief,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduledRevocation {
    pub time_sec: f64,
    pub target: RevocationTarget,
}

/// Where the wall time went. The first three fields partition total time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    /// Training with no checkpoint in progress.
    pub compute_sec: f64,
    /// A checkpoint write was in progress.
    pub checkpoint_sec: f64,
    /// No live workers.
    pub waiting_sec: f64,
    /// Integral of missing workers (initial count minus live count) over time.
    pub degraded_capacity_worker_seconds: f64,
    /// Steps discarded by rollbacks and executed again.
    pub recomputed_steps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndReason {
    Revoked,
    LifetimeCap,
    Running,
    Pending,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerSummary {
    pub id: usize,
    pub slot: usize,
    pub gpu_name: String,
    pub region: String,
    pub is_replacement: bool,
    pub requested_at_sec: f64,
    pub ready_at_sec: Option<f64>,
    pub ended_at_sec: Option<f64>,
    pub end_reason: EndReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub total_time_sec: f64,
    pub completed_steps: u64,
    /// Includes recomputed steps.
    pub executed_steps: f64,
    pub revocation_count: u32,
    pub checkpoint_count: u32,
    pub replacement_count: u32,
    pub breakdown: Breakdown,
    pub speed_window_steps: u64,
    pub speed_series: Vec<SpeedSample>,
    pub trace: Vec<SimEvent>,
    pub workers: Vec<WorkerSummary>,
}

/// Re-windows `result.speed_series` into windows of `window_steps`, which
/// must be a multiple of the simulated window.
pub fn measured_speed(result: &SimResult, window_steps: u64) -> Result<Vec<SpeedSample>> {
    let base = result.speed_window_steps;
    if window_steps == 0 || !window_steps.is_multiple_of(base) {
        return Err(SimError::Config(format!(
            "window {window_steps} is not a multiple of the simulated {base}-step window"
        )));
    }
    let group = (window_steps / base) as usize;
    let mut out = Vec::with_capacity(result.speed_series.len() / group);
    let mut start = 0.0;
    for chunk in result.speed_series.chunks_exact(group) {
        let end = chunk[group - 1].end_time_sec;
        let slots = chunk.iter().map(|s| s.worker_speeds.len()).max().unwrap_or(0);
        let mut worker_speeds = Vec::with_capacity(slots);
        for slot in 0..slots {
            let mut steps = 0.0;
            let mut t0 = start;
            let mut known = true;
            for s in chunk {
                match s.worker_speeds.get(slot).copied().flatten() {
                    Some(v) => steps += v * (s.end_time_sec - t0),
                    None => known = false,
                }
                t0 = s.end_time_sec;
            }
            worker_speeds.push(known.then(|| steps / (end - start)));
        }
        out.push(SpeedSample { end_time_sec: end, steps_per_sec: window_steps as f64 / (end - start), worker_speeds });
        start = end;
    }
    Ok(out)
}

/// Runs one scenario with lifetimes sampled from `models.lifetimes`.
pub fn simulate(config: &ClusterConfig, models: &SimModels) -> Result<SimResult> {
    Sim::new(config, models, Revocations::Sampled)?.run()
}

/// Runs one scenario with revocations taken from `schedule` instead of
/// being sampled. The 24 h cap still applies.
pub fn replay_revocations(
    config: &ClusterConfig,
    models: &SimModels,
    schedule: &[ScheduledRevocation],
) -> Result<SimResult> {
    if let Some(bad) = schedule.iter().find(|s| !(s.time_sec >= 0.0 && s.time_sec.is_finite())) {
        return Err(SimError::Config(format!("scheduled revocation time must be nonnegative, got {}", bad.time_sec)));
    }
    Sim::new(config, models, Revocations::Scheduled(schedule))?.run()
}

#[derive(Clone, Copy)]
enum Revocations<'a> {
    Sampled,
    Scheduled(&'a [ScheduledRevocation]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pending,
    Alive,
    Dead,
}

#[derive(Debug, Clone)]
struct Worker {
    spec: WorkerSpec,
    slot: usize,
    speed: f64,
    status: Status,
    is_replacement: bool,
    requested_at: f64,
    ready_at: Option<f64>,
    ended: Option<(f64, EndReason)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Queued {
    Revocation(usize),
    Scheduled(usize),
    LifetimeCap(usize),
    CheckpointEnd(u64),
    ReplacementReady(usize),
}

impl Queued {
    fn priority(self) -> u8 {
        match self {
            Queued::Revocation(_) | Queued::Scheduled(_) => 0,
            Queued::LifetimeCap(_) => 1,
            Queued::CheckpointEnd(_) => 2,
            Queued::ReplacementReady(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    time: f64,
    worker: usize,
    seq: u64,
    ev: Queued,
}

impl Entry {
    fn key(&self) -> (f64, u8, usize, u64) {
        (self.time, self.ev.priority(), self.worker, self.seq)
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Reversed so the max-heap pops the earliest entry.
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)).then(b.2.cmp(&a.2)).then(b.3.cmp(&a.3))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Dynamic {
    CheckpointStart,
    /// Progress reaches N_w.
    ReachWorkload,
    Complete,
}

impl Dynamic {
    fn priority(self) -> u8 {
        match self {
            Dynamic::CheckpointStart => 4,
            Dynamic::ReachWorkload | Dynamic::Complete => 5,
        }
    }
}

struct Sim<'a> {
    cfg: &'a ClusterConfig,
    models: &'a SimModels,
    revocations: Revocations<'a>,
    rng: ChaCha8Rng,
    jitter: Option<LogNormal<f64>>,
    replacement_startup: Vec<Option<StartupModel>>,
    overhead_sec: f64,
    cap_total: f64,
    target: f64,

    t: f64,
    progress: f64,
    executed: f64,
    committed: f64,
    pending_milestone: f64,
    milestone_before_write: f64,
    in_checkpoint: bool,
    checkpoint_gen: u64,
    snapshot: f64,
    chief: Option<usize>,
    chief_slot: usize,

    workers: Vec<Worker>,
    heap: BinaryHeap<Entry>,
    seq: u64,
    trace: Vec<SimEvent>,
    breakdown: Breakdown,
    revocation_count: u32,
    checkpoint_count: u32,
    replacement_count: u32,

    window_steps: f64,
    next_window_end: f64,
    window_start_time: f64,
    slot_occupant: Vec<Option<usize>>,
    slot_steps: Vec<f64>,
    slot_window_start: Vec<f64>,
    slot_disrupted: Vec<bool>,
    series: Vec<SpeedSample>,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a ClusterConfig, models: &'a SimModels, revocations: Revocations<'a>) -> Result<Self> {
        cfg.validate()?;
        if !(models.checkpoint_sec >= 0.0 && models.checkpoint_sec.is_finite()) {
            return Err(SimError::Config(format!(
                "checkpoint time must be nonnegative, got {}",
                models.checkpoint_sec
            )));
        }
        let sampled = matches!(revocations, Revocations::Sampled);
        for w in &cfg.workers {
            models.speed_of(&w.gpu_name)?;
            if sampled {
                models.check_lifetimes(w)?;
            }
        }
        // Startup models are resolved per slot so sampling never fails mid-run.
        let mut replacement_startup = Vec::with_capacity(cfg.workers.len());
        let mut overhead_sec = 0.0;
        for w in &cfg.workers {
            match cfg.replacement_for(w) {
                Some(r) => {
                    models.speed_of(&r.gpu_name)?;
                    if sampled && cfg.options.replacement_revocations {
                        models.check_lifetimes(&r)?;
                    }
                    replacement_startup.push(models.startup_model(&r)?);
                    overhead_sec = models.overhead_sec(&cfg.cnn.name)?;
                }
                None => replacement_startup.push(None),
            }
        }
        if let StartupSource::Fixed(s) = models.startup {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(SimError::Config(format!("startup time must be nonnegative, got {s}")));
            }
        }
        if !(overhead_sec >= 0.0 && overhead_sec.is_finite()) {
            return Err(SimError::Config(format!("replacement overhead must be nonnegative, got {overhead_sec}")));
        }
        let jitter = match cfg.options.speed_jitter_sigma {
            Some(s) if s > 0.0 => {
                Some(LogNormal::new(-0.5 * s * s, s).map_err(|e| SimError::Config(format!("speed jitter: {e}")))?)
            }
            _ => None,
        };
        let n = cfg.workers.len();
        let interval = cfg.checkpoint_interval_steps as f64;
        let window_steps = cfg.options.speed_window_steps as f64;
        Ok(Self {
            cfg,
            models,
            revocations,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            jitter,
            replacement_startup,
            overhead_sec,
            cap_total: models.ps_cap.total(cfg.ps_count),
            target: cfg.workload_steps as f64,
            t: 0.0,
            progress: 0.0,
            executed: 0.0,
            committed: 0.0,
            pending_milestone: interval,
            milestone_before_write: interval,
            in_checkpoint: false,
            checkpoint_gen: 0,
            snapshot: 0.0,
            chief: Some(0),
            chief_slot: 0,
            workers: Vec::new(),
            heap: BinaryHeap::new(),
            seq: 0,
            trace: Vec::new(),
            breakdown: Breakdown::default(),
            revocation_count: 0,
            checkpoint_count: 0,
            replacement_count: 0,
            window_steps,
            next_window_end: window_steps,
            window_start_time: 0.0,
            slot_occupant: vec![None; n],
            slot_steps: vec![0.0; n],
            slot_window_start: vec![0.0; n],
            slot_disrupted: vec![false; n],
            series: Vec::new(),
        })
    }

    fn push(&mut self, time: f64, worker: usize, ev: Queued) {
        self.seq += 1;
        self.heap.push(Entry { time, worker, seq: self.seq, ev });
    }

    fn log(&mut self, kind: EventKind, subject: Subject) {
        self.trace.push(SimEvent { time_sec: self.t, kind, subject });
    }

    fn spawn(&mut self, spec: WorkerSpec, slot: usize, is_replacement: bool) {
        let id = self.workers.len();
        let mut speed = self.models.worker_speeds[&spec.gpu_name];
        if let Some(j) = &self.jitter {
            speed *= j.sample(&mut self.rng);
        }
        let (status, ready_at) = if is_replacement {
            let startup = match (&self.models.startup, &self.replacement_startup[slot]) {
                (StartupSource::Fixed(s), _) => *s,
                (StartupSource::Table(_), Some(m)) => {
                    m.sample_scaled(&mut self.rng, self.cfg.options.startup_variance_multiplier)
                }
                (StartupSource::Table(_), None) => unreachable!("startup models are resolved for every slot"),
            };
            let ready = self.t + startup + self.overhead_sec;
            self.push(ready, id, Queued::ReplacementReady(id));
            (Status::Pending, None)
        } else {
            self.slot_occupant[slot] = Some(id);
            (Status::Alive, Some(self.t))
        };
        let revocable = !is_replacement || self.cfg.options.replacement_revocations;
        if revocable {
            match self.revocations {
                Revocations::Sampled => {
                    let dist = self.models.lifetimes.get(&spec.gpu_name, &spec.region).expect("coverage checked");
                    match dist.sample(&mut self.rng) {
                        LifetimeSample::RevokedAt(l) => self.push(self.t + l, id, Queued::Revocation(id)),
                        LifetimeSample::Survived24h => {
                            self.push(self.t + MAX_LIFETIME_SEC, id, Queued::LifetimeCap(id))
                        }
                    }
                }
                Revocations::Scheduled(_) => self.push(self.t + MAX_LIFETIME_SEC, id, Queued::LifetimeCap(id)),
            }
        }
        self.workers.push(Worker {
            spec,
            slot,
            speed,
            status,
            is_replacement,
            requested_at: self.t,
            ready_at,
            ended: None,
        });
    }

    fn contributes(&self, id: usize) -> bool {
        let w = &self.workers[id];
        if w.status != Status::Alive || self.progress >= self.target {
            return false;
        }
        if self.in_checkpoint {
            return match self.cfg.options.checkpoint_stall {
                CheckpointStall::FullStop => false,
                CheckpointStall::ChiefPause => self.chief != Some(id),
            };
        }
        true
    }

    /// Cluster rate and the factor applied to each contributing worker.
    fn rate(&self) -> (f64, f64) {
        let sum: f64 = (0..self.workers.len()).filter(|&i| self.contributes(i)).map(|i| self.workers[i].speed).sum();
        if sum <= 0.0 {
            return (0.0, 0.0);
        }
        let rate = sum.min(self.cap_total);
        (rate, rate / sum)
    }

    fn alive_count(&self) -> usize {
        self.workers.iter().filter(|w| w.status == Status::Alive).count()
    }

    fn slot_rates(&self, scale: f64) -> Vec<f64> {
        self.slot_occupant
            .iter()
            .map(|o| match o {
                Some(id) if self.contributes(*id) => self.workers[*id].speed * scale,
                _ => 0.0,
            })
            .collect()
    }

    /// Moves time forward by `dt`; `snap` pins progress to a boundary reached
    /// exactly at the end of the interval.
    fn advance(&mut self, dt: f64, snap: Option<f64>) {
        if dt <= 0.0 && snap.is_none() {
            return;
        }
        let (rate, scale) = self.rate();
        let alive = self.alive_count();
        if self.in_checkpoint {
            self.breakdown.checkpoint_sec += dt;
        } else if alive == 0 {
            self.breakdown.waiting_sec += dt;
        } else {
            self.breakdown.compute_sec += dt;
        }
        self.breakdown.degraded_capacity_worker_seconds += self.cfg.workers.len().saturating_sub(alive) as f64 * dt;

        let dp = match snap {
            Some(target) => target - self.progress,
            None => rate * dt,
        };
        let slot_rates = self.slot_rates(scale);
        let exec_end = self.executed + dp;
        while rate > 0.0 && self.next_window_end <= exec_end + STEP_EPS {
            let tc = (self.t + (self.next_window_end - self.executed) / rate).min(self.t + dt);
            let span = tc - self.window_start_time;
            let worker_speeds = (0..slot_rates.len())
                .map(|s| {
                    let at = self.slot_steps[s] + slot_rates[s] * (tc - self.t);
                    let v = (!self.slot_disrupted[s]).then(|| (at - self.slot_window_start[s]) / span);
                    self.slot_window_start[s] = at;
                    self.slot_disrupted[s] = self.slot_occupant[s].is_none();
                    v
                })
                .collect();
            self.series.push(SpeedSample { end_time_sec: tc, steps_per_sec: self.window_steps / span, worker_speeds });
            self.window_start_time = tc;
            self.next_window_end += self.window_steps;
        }
        for (acc, r) in self.slot_steps.iter_mut().zip(&slot_rates) {
            *acc += r * dt;
        }
        self.progress = snap.unwrap_or(self.progress + dp);
        self.executed = exec_end;
        self.t += dt;
    }

    fn checkpoint_due(&self) -> bool {
        if self.in_checkpoint || self.chief.is_none() {
            return false;
        }
        let reached = self.progress + STEP_EPS >= self.pending_milestone && self.pending_milestone <= self.target;
        let final_due =
            self.cfg.options.final_checkpoint && self.progress >= self.target && self.committed < self.target;
        reached || final_due
    }

    fn next_dynamic(&self, rate: f64) -> Option<(f64, Dynamic, Option<f64>)> {
        if self.checkpoint_due() {
            return Some((self.t, Dynamic::CheckpointStart, None));
        }
        if self.progress >= self.target {
            return (!self.in_checkpoint).then_some((self.t, Dynamic::Complete, None));
        }
        if rate <= 0.0 {
            return None;
        }
        let reach = (self.t + (self.target - self.progress) / rate, Dynamic::ReachWorkload, Some(self.target));
        if self.chief.is_some() && !self.in_checkpoint && self.pending_milestone <= self.target {
            let m = self.pending_milestone;
            let at = self.t + (m - self.progress) / rate;
            if at <= reach.0 {
                return Some((at, Dynamic::CheckpointStart, Some(m)));
            }
        }
        Some(reach)
    }

    fn stall(&self) -> SimError {
        SimError::Stall {
            time_sec: self.t,
            completed_steps: self.progress,
            target_steps: self.cfg.workload_steps,
            trace: self.trace.clone(),
        }
    }

    fn run(mut self) -> Result<SimResult> {
        for (slot, spec) in self.cfg.workers.iter().enumerate() {
            self.spawn(spec.clone(), slot, false);
        }
        if let Revocations::Scheduled(schedule) = self.revocations {
            for (i, s) in schedule.iter().enumerate() {
                let key = match s.target {
                    RevocationTarget::Worker(id) => id,
                    RevocationTarget::Chief => usize::MAX,
                };
                self.push(s.time_sec, key, Queued::Scheduled(i));
            }
        }

        loop {
            let (rate, _) = self.rate();
            let dynamic = self.next_dynamic(rate);
            let next_static = self.heap.peek().copied();
            let take_dynamic = match (dynamic, next_static) {
                (Some((td, d, _)), Some(e)) => td < e.time || (td == e.time && d.priority() < e.ev.priority()),
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => return Err(self.stall()),
            };
            if take_dynamic {
                let (td, d, snap) = dynamic.expect("checked above");
                self.advance(td - self.t, snap);
                match d {
                    Dynamic::CheckpointStart => self.start_checkpoint(),
                    Dynamic::ReachWorkload => {}
                    Dynamic::Complete => {
                        self.log(EventKind::TrainingComplete, Subject::Cluster);
                        return Ok(self.finish());
                    }
                }
            } else {
                let e = self.heap.pop().expect("checked above");
                self.advance(e.time - self.t, None);
                self.handle(e.ev)?;
            }
        }
    }

    fn start_checkpoint(&mut self) {
        let chief = self.chief.expect("checkpoint needs a chief");
        if (self.progress - self.progress.round()).abs() < STEP_EPS {
            self.progress = self.progress.round();
        }
        self.snapshot = self.progress.floor();
        self.in_checkpoint = true;
        self.checkpoint_gen += 1;
        self.milestone_before_write = self.pending_milestone;
        self.pending_milestone = self.snapshot + self.cfg.checkpoint_interval_steps as f64;
        self.log(EventKind::CheckpointStart, Subject::Worker(chief));
        let end = self.t + self.models.checkpoint_sec;
        self.push(end, chief, Queued::CheckpointEnd(self.checkpoint_gen));
    }

    fn handle(&mut self, ev: Queued) -> Result<()> {
        match ev {
            Queued::Revocation(id) => self.revoke(id, EventKind::Revocation),
            Queued::LifetimeCap(id) => self.revoke(id, EventKind::LifetimeCap24h),
            Queued::Scheduled(i) => {
                let Revocations::Scheduled(schedule) = self.revocations else { unreachable!() };
                let id = match schedule[i].target {
                    RevocationTarget::Chief => match self.chief {
                        Some(c) => c,
                        None => return Ok(()),
                    },
                    RevocationTarget::Worker(id) if id >= self.workers.len() => {
                        return Err(SimError::UnknownWorker { worker: id, time_sec: self.t });
                    }
                    RevocationTarget::Worker(id) => id,
                };
                self.revoke(id, EventKind::Revocation)
            }
            Queued::CheckpointEnd(gen) => {
                if gen == self.checkpoint_gen && self.in_checkpoint {
                    self.in_checkpoint = false;
                    self.committed = self.snapshot;
                    self.checkpoint_count += 1;
                    let chief = self.chief.expect("checkpoint writer is chief");
                    self.log(EventKind::CheckpointEnd, Subject::Worker(chief));
                }
                Ok(())
            }
            Queued::ReplacementReady(id) => {
                if self.workers[id].status != Status::Pending {
                    return Ok(());
                }
                let slot = self.workers[id].slot;
                self.workers[id].status = Status::Alive;
                self.workers[id].ready_at = Some(self.t);
                self.slot_occupant[slot] = Some(id);
                self.slot_disrupted[slot] = true;
                self.log(EventKind::ReplacementReady, Subject::Worker(id));
                let takes_chief = match self.cfg.chief_mode {
                    ChiefMode::CmdareHandover => true,
                    ChiefMode::LegacyIpReuse => slot == self.chief_slot,
                };
                if self.chief.is_none() && takes_chief {
                    self.chief = Some(id);
                    self.chief_slot = slot;
                    self.log(EventKind::ChiefHandover, Subject::Worker(id));
                }
                Ok(())
            }
        }
    }

    fn revoke(&mut self, id: usize, kind: EventKind) -> Result<()> {
        if self.workers[id].status == Status::Dead {
            return Ok(());
        }
        self.log(kind, Subject::Worker(id));
        self.revocation_count += 1;
        let reason = if kind == EventKind::LifetimeCap24h { EndReason::LifetimeCap } else { EndReason::Revoked };
        let was_alive = self.workers[id].status == Status::Alive;
        let slot = self.workers[id].slot;
        self.workers[id].status = Status::Dead;
        self.workers[id].ended = Some((self.t, reason));
        if was_alive {
            self.slot_occupant[slot] = None;
            self.slot_disrupted[slot] = true;
        }

        if self.chief == Some(id) {
            if self.in_checkpoint {
                // The in-flight write is lost.
                self.in_checkpoint = false;
                self.checkpoint_gen += 1;
                self.pending_milestone = self.milestone_before_write;
            }
            self.chief = None;
            self.chief_slot = slot;
            match self.cfg.chief_mode {
                ChiefMode::CmdareHandover => {
                    if let Some(next) = self.workers.iter().position(|w| w.status == Status::Alive) {
                        self.chief = Some(next);
                        self.chief_slot = self.workers[next].slot;
                        self.log(EventKind::ChiefHandover, Subject::Worker(next));
                    }
                }
                ChiefMode::LegacyIpReuse => {
                    let lost = self.progress - self.committed;
                    if lost > 0.0 {
                        self.breakdown.recomputed_steps += lost;
                    }
                    self.progress = self.committed;
                    self.pending_milestone = self.committed + self.cfg.checkpoint_interval_steps as f64;
                    self.log(EventKind::RecomputeRollback, Subject::Cluster);
                }
            }
        }

        if let Some(spec) = self.cfg.replacement_for(&self.workers[id].spec) {
            let new_id = self.workers.len();
            self.replacement_count += 1;
            self.log(EventKind::ReplacementRequested, Subject::Worker(new_id));
            self.spawn(spec, slot, true);
        }

        if self.workers.iter().all(|w| w.status == Status::Dead) {
            return Err(self.stall());
        }
        Ok(())
    }

    fn finish(self) -> SimResult {
        let workers = self
            .workers
            .iter()
            .enumerate()
            .map(|(id, w)| {
                let (ended_at_sec, end_reason) = match (w.ended, w.status) {
                    (Some((t, r)), _) => (Some(t), r),
                    (None, Status::Pending) => (None, EndReason::Pending),
                    (None, _) => (None, EndReason::Running),
                };
                WorkerSummary {
                    id,
                    slot: w.slot,
                    gpu_name: w.spec.gpu_name.clone(),
                    region: w.spec.region.clone(),
                    is_replacement: w.is_replacement,
                    requested_at_sec: w.requested_at,
                    ready_at_sec: w.ready_at,
                    ended_at_sec,
                    end_reason,
                }
            })
            .collect();
        SimResult {
            total_time_sec: self.t,
            completed_steps: self.cfg.workload_steps,
            executed_steps: self.executed,
            revocation_count: self.revocation_count,
            checkpoint_count: self.checkpoint_count,
            replacement_count: self.replacement_count,
            breakdown: self.breakdown,
            speed_window_steps: self.cfg.options.speed_window_steps,
            speed_series: self.series,
            trace: self.trace,
            workers,
        }
    }
}
