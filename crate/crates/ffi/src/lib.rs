//! C ABI over the transim planner.
//!
//! Every fallible function returns a [`TransimStatus`]. On failure the
//! message is kept per thread and read with [`transim_last_error`]. Handles
//! are opaque and must be released with their `_free` function.

// Index loops read better in the matrix code; negated float comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use transim::advisor::{predict_training_time, AlertMode, Classification, Detector, DetectorConfig};
use transim::data::{DataError, ModelBundle, Scenario};
use transim::perf::{predict_cluster_speed, PsCapacity};
use transim::revocation::prob_revoked_within;
use transim::simulator::{replay_revocations, simulate, SimError, SpeedSample};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Schema = 4,
    Bundle = 5,
    Scenario = 6,
    Coverage = 7,
    InvalidInput = 8,
    Stall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransimClassification {
    ParameterServer = 0,
    StragglerWorker = 1,
    Unclassified = 2,
}

/// A loaded model bundle.
pub struct TransimBundle {
    inner: ModelBundle,
}

/// An incremental bottleneck detector.
pub struct TransimDetector {
    inner: Detector,
    workers: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TransimPrediction {
    pub total_time_sec: f64,
    pub speed_steps_per_sec: f64,
    pub expected_revocations: f64,
    pub checkpoint_count: u64,
    pub compute_sec: f64,
    pub checkpoint_sec: f64,
    pub revocation_sec: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TransimSimSummary {
    pub total_time_sec: f64,
    pub completed_steps: u64,
    pub revocation_count: u32,
    pub replacement_count: u32,
    pub checkpoint_count: u32,
    pub compute_sec: f64,
    pub checkpoint_sec: f64,
    pub waiting_sec: f64,
    pub recomputed_steps: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransimAlert {
    pub detected_at_sec: f64,
    pub predicted_speed: f64,
    pub measured_speed: f64,
    pub deficit_fraction: f64,
    pub classification: TransimClassification,
    /// -1 unless the alert names a straggler.
    pub straggler_slot: i64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(TransimStatus, String);

type FfiResult<T> = Result<T, Failure>;

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> TransimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            TransimStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            TransimStatus::Panic
        }
    }
}

fn data_failure(e: DataError) -> Failure {
    let status = match &e {
        DataError::Io { .. } => TransimStatus::Io,
        DataError::Schema { .. } => TransimStatus::Schema,
        DataError::Bundle(_) => TransimStatus::Bundle,
        DataError::Scenario(_) => TransimStatus::Scenario,
        DataError::Coverage(_) => TransimStatus::Coverage,
        _ => TransimStatus::InvalidInput,
    };
    Failure(status, e.to_string())
}

fn sim_failure(e: SimError) -> Failure {
    let status = match &e {
        SimError::Coverage(_) => TransimStatus::Coverage,
        SimError::Stall { .. } => TransimStatus::Stall,
        _ => TransimStatus::InvalidInput,
    };
    Failure(status, e.to_string())
}

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure(TransimStatus::InvalidInput, e.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Failure(TransimStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(TransimStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| Failure(TransimStatus::NullPointer, format!("{name} is null")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| Failure(TransimStatus::NullPointer, format!("{name} is null")))
}

unsafe fn slice_arg<'a>(p: *const f64, n: usize, name: &str) -> FfiResult<&'a [f64]> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure(TransimStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn transim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn transim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads and verifies a bundle file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn transim_bundle_load(path: *const c_char, out: *mut *mut TransimBundle) -> TransimStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let inner = ModelBundle::load(Path::new(path)).map_err(data_failure)?;
        *out = Box::into_raw(Box::new(TransimBundle { inner }));
        Ok(())
    })
}

/// Parses and verifies a bundle from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn transim_bundle_from_json(json: *const c_char, out: *mut *mut TransimBundle) -> TransimStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let inner = ModelBundle::from_json(str_arg(json, "json")?).map_err(data_failure)?;
        *out = Box::into_raw(Box::new(TransimBundle { inner }));
        Ok(())
    })
}

/// # Safety
/// `bundle` must come from a bundle constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn transim_bundle_free(bundle: *mut TransimBundle) {
    if !bundle.is_null() {
        drop(Box::from_raw(bundle));
    }
}

/// Closed-form training-time prediction for a TOML scenario.
///
/// # Safety
/// Pointers must be valid; `scenario_toml` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn transim_predict(
    bundle: *const TransimBundle,
    scenario_toml: *const c_char,
    out: *mut TransimPrediction,
) -> TransimStatus {
    guard(|| {
        let bundle = ref_arg(bundle, "bundle")?;
        let out = out_arg(out, "out")?;
        let scenario = Scenario::from_toml(str_arg(scenario_toml, "scenario_toml")?).map_err(data_failure)?;
        let resolved = scenario.resolve(&bundle.inner).map_err(data_failure)?;
        let p = predict_training_time(&resolved.prediction_inputs()).map_err(invalid)?;
        *out = TransimPrediction {
            total_time_sec: p.total_time_sec,
            speed_steps_per_sec: p.speed_steps_per_sec,
            expected_revocations: p.expected_revocations,
            checkpoint_count: p.checkpoint_count,
            compute_sec: p.components.compute_sec,
            checkpoint_sec: p.components.checkpoint_sec,
            revocation_sec: p.components.revocation_sec,
        };
        Ok(())
    })
}

/// One simulation run of a TOML scenario with `seed` in place of the
/// scenario seed.
///
/// # Safety
/// Pointers must be valid; `scenario_toml` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn transim_simulate(
    bundle: *const TransimBundle,
    scenario_toml: *const c_char,
    seed: u64,
    out: *mut TransimSimSummary,
) -> TransimStatus {
    guard(|| {
        let bundle = ref_arg(bundle, "bundle")?;
        let out = out_arg(out, "out")?;
        let scenario = Scenario::from_toml(str_arg(scenario_toml, "scenario_toml")?).map_err(data_failure)?;
        let mut resolved = scenario.resolve(&bundle.inner).map_err(data_failure)?;
        resolved.config.seed = seed;
        let r = if resolved.revocations {
            simulate(&resolved.config, &resolved.models)
        } else {
            replay_revocations(&resolved.config, &resolved.models, &[])
        }
        .map_err(sim_failure)?;
        *out = TransimSimSummary {
            total_time_sec: r.total_time_sec,
            completed_steps: r.completed_steps,
            revocation_count: r.revocation_count,
            replacement_count: r.replacement_count,
            checkpoint_count: r.checkpoint_count,
            compute_sec: r.breakdown.compute_sec,
            checkpoint_sec: r.breakdown.checkpoint_sec,
            waiting_sec: r.breakdown.waiting_sec,
            recomputed_steps: r.breakdown.recomputed_steps,
        };
        Ok(())
    })
}

/// Probability that a server of (`gpu`, `region`) is revoked within
/// `duration_sec`.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn transim_prob_revoked_within(
    bundle: *const TransimBundle,
    gpu: *const c_char,
    region: *const c_char,
    duration_sec: f64,
    out: *mut f64,
) -> TransimStatus {
    guard(|| {
        let bundle = ref_arg(bundle, "bundle")?;
        let out = out_arg(out, "out")?;
        let (gpu, region) = (str_arg(gpu, "gpu")?, str_arg(region, "region")?);
        if !(duration_sec >= 0.0) {
            return Err(invalid(format!("duration must be nonnegative, got {duration_sec}")));
        }
        let dist =
            bundle.inner.lifetimes.get(gpu, region).ok_or_else(|| {
                Failure(TransimStatus::Coverage, format!("no lifetime distribution for {gpu}/{region}"))
            })?;
        *out = prob_revoked_within(dist, duration_sec);
        Ok(())
    })
}

/// min(Σ speeds, ps_count × cap); pass an infinite `cap_per_ps` for no cap.
///
/// # Safety
/// `speeds` must point to `n` doubles and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn transim_predict_cluster_speed(
    speeds: *const f64,
    n: usize,
    ps_count: u32,
    cap_per_ps: f64,
    out: *mut f64,
) -> TransimStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let speeds = slice_arg(speeds, n, "speeds")?;
        let cap = if cap_per_ps == f64::INFINITY {
            PsCapacity::unbounded()
        } else {
            PsCapacity::new(cap_per_ps).map_err(invalid)?
        };
        *out = predict_cluster_speed(speeds, ps_count, cap).map_err(invalid)?;
        Ok(())
    })
}

/// Creates a detector. `worker_predicted` may be null when `n_workers` is 0,
/// which disables classification.
///
/// # Safety
/// `worker_predicted` must point to `n_workers` doubles and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn transim_detector_new(
    predicted_speed: f64,
    worker_predicted: *const f64,
    n_workers: usize,
    threshold: f64,
    warmup_sec: f64,
    running_mean: bool,
    out: *mut *mut TransimDetector,
) -> TransimStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let workers = slice_arg(worker_predicted, n_workers, "worker_predicted")?;
        let config = DetectorConfig {
            threshold,
            warmup_sec,
            mode: if running_mean { AlertMode::RunningMean } else { AlertMode::PerWindow },
            ..DetectorConfig::default()
        };
        let per_worker = (!workers.is_empty()).then(|| workers.to_vec());
        let inner = Detector::new(predicted_speed, per_worker, config).map_err(invalid)?;
        *out = Box::into_raw(Box::new(TransimDetector { inner, workers: n_workers }));
        Ok(())
    })
}

/// Feeds one speed window. `worker_speeds` holds one entry per worker slot
/// (NaN for an unmeasured slot) or is null with `n` 0. `*alerted` tells
/// whether `*alert` was written.
///
/// # Safety
/// `detector` must be live; other pointers valid for their lengths.
#[no_mangle]
pub unsafe extern "C" fn transim_detector_observe(
    detector: *mut TransimDetector,
    end_time_sec: f64,
    steps_per_sec: f64,
    worker_speeds: *const f64,
    n: usize,
    alert: *mut TransimAlert,
    alerted: *mut bool,
) -> TransimStatus {
    guard(|| {
        let det = out_arg(detector, "detector")?;
        let alert = out_arg(alert, "alert")?;
        let alerted = out_arg(alerted, "alerted")?;
        let speeds = slice_arg(worker_speeds, n, "worker_speeds")?;
        if n != 0 && n != det.workers {
            return Err(invalid(format!("{n} worker speeds for a detector of {} workers", det.workers)));
        }
        let sample = SpeedSample {
            end_time_sec,
            steps_per_sec,
            worker_speeds: speeds.iter().map(|&v| (!v.is_nan()).then_some(v)).collect(),
        };
        *alerted = false;
        if let Some(a) = det.inner.observe(&sample).map_err(invalid)? {
            *alert = TransimAlert {
                detected_at_sec: a.detected_at_sec,
                predicted_speed: a.predicted_speed,
                measured_speed: a.measured_speed,
                deficit_fraction: a.deficit_fraction,
                classification: match a.classification {
                    Classification::ParameterServer => TransimClassification::ParameterServer,
                    Classification::StragglerWorker => TransimClassification::StragglerWorker,
                    Classification::Unclassified => TransimClassification::Unclassified,
                },
                straggler_slot: a.straggler_slot.map_or(-1, |s| s as i64),
            };
            *alerted = true;
        }
        Ok(())
    })
}

/// # Safety
/// `detector` must come from [`transim_detector_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn transim_detector_free(detector: *mut TransimDetector) {
    if !detector.is_null() {
        drop(Box::from_raw(detector));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCENARIO: &str = "seed = 1\ncnn = \"ResNet-32\"\ncnn_gflops = 1.54\nworkload_steps = 64000\n\
        checkpoint_interval_steps = 4000\n[[workers]]\ngpu_name = \"K80\"\nregion = \"us-west1\"\n\
        [models]\nworker_speeds = { K80 = 4.56 }\ncheckpoint_sec = 3.84\nrevocations = false\n\
        [options]\ncheckpoint_stall = \"full-stop\"\n\0";

    fn empty_bundle() -> *mut TransimBundle {
        let json = CString::new(ModelBundle::default().to_json().unwrap()).unwrap();
        let mut b = std::ptr::null_mut();
        assert_eq!(unsafe { transim_bundle_from_json(json.as_ptr(), &mut b) }, TransimStatus::Ok);
        b
    }

    fn last_error() -> String {
        let p = transim_last_error();
        assert!(!p.is_null());
        unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
    }

    #[test]
    fn predict_and_simulate_agree_on_the_worked_example() {
        let b = empty_bundle();
        let mut p = TransimPrediction::default();
        let status = unsafe { transim_predict(b, SCENARIO.as_ptr().cast(), &mut p) };
        assert_eq!(status, TransimStatus::Ok);
        assert!((p.total_time_sec - 14096.53).abs() < 0.005);
        assert!(transim_last_error().is_null());
        let mut s = TransimSimSummary::default();
        assert_eq!(unsafe { transim_simulate(b, SCENARIO.as_ptr().cast(), 3, &mut s) }, TransimStatus::Ok);
        assert!((s.total_time_sec / p.total_time_sec - 1.0).abs() < 1e-3);
        assert_eq!(s.completed_steps, 64_000);
        unsafe { transim_bundle_free(b) };
    }

    #[test]
    fn errors_set_status_and_message() {
        let mut b = std::ptr::null_mut();
        let status = unsafe { transim_bundle_from_json(c"{}".as_ptr(), &mut b) };
        assert_eq!(status, TransimStatus::Bundle);
        assert!(last_error().contains("malformed bundle"));
        assert!(b.is_null());

        assert_eq!(unsafe { transim_bundle_load(std::ptr::null(), &mut b) }, TransimStatus::NullPointer);
        assert_eq!(last_error(), "path is null");

        let bundle = empty_bundle();
        let mut out = 0.0;
        let status =
            unsafe { transim_prob_revoked_within(bundle, c"V100".as_ptr(), c"asia-east1".as_ptr(), 10.0, &mut out) };
        assert_eq!(status, TransimStatus::Coverage);
        assert_eq!(last_error(), "no lifetime distribution for V100/asia-east1");
        unsafe { transim_bundle_free(bundle) };
    }

    #[test]
    fn cluster_speed_respects_cap() {
        let speeds = [9.48; 8];
        let mut out = 0.0;
        assert_eq!(unsafe { transim_predict_cluster_speed(speeds.as_ptr(), 8, 1, 40.0, &mut out) }, TransimStatus::Ok);
        assert_eq!(out, 40.0);
        let status = unsafe { transim_predict_cluster_speed(speeds.as_ptr(), 8, 1, f64::INFINITY, &mut out) };
        assert_eq!(status, TransimStatus::Ok);
        assert!((out - 75.84).abs() < 1e-9);
    }

    #[test]
    fn detector_alerts_after_two_slow_windows() {
        let per_worker = [10.0, 10.0];
        let mut d = std::ptr::null_mut();
        let status = unsafe { transim_detector_new(20.0, per_worker.as_ptr(), 2, 0.067, 30.0, false, &mut d) };
        assert_eq!(status, TransimStatus::Ok);
        let mut alert = TransimAlert {
            detected_at_sec: 0.0,
            predicted_speed: 0.0,
            measured_speed: 0.0,
            deficit_fraction: 0.0,
            classification: TransimClassification::Unclassified,
            straggler_slot: 0,
        };
        let mut alerted = false;
        let mut fired = Vec::new();
        for t in [10.0, 35.0, 40.0, 45.0] {
            let w = [7.5, 7.5];
            let s = unsafe { transim_detector_observe(d, t, 15.0, w.as_ptr(), 2, &mut alert, &mut alerted) };
            assert_eq!(s, TransimStatus::Ok);
            fired.push(alerted);
        }
        assert_eq!(fired, [false, false, true, false]);
        let w = [7.5, 7.5, 7.5];
        let s = unsafe { transim_detector_observe(d, 50.0, 15.0, w.as_ptr(), 3, &mut alert, &mut alerted) };
        assert_eq!(s, TransimStatus::InvalidInput);
        unsafe { transim_detector_free(d) };
    }
}
