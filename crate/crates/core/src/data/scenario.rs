use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_text, DataError, ModelBundle, Result};
use crate::advisor::{PredictionInputs, RunningAverage};
use crate::perf::{
    predict_checkpoint_time, predict_worker_speed, CheckpointVariant, CnnModel, PsCapacity, StepTimeVariant,
};
use crate::revocation::{replacement_overhead, LifetimeDistribution, Offering, StartKind};
use crate::simulator::{
    ChiefMode, ClusterConfig, OverheadSource, ReplacementPolicy, SimModels, SimOptions, StartupSource, WorkerSpec,
};

/// `count` identical workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkerGroup {
    pub gpu_name: String,
    pub region: String,
    #[serde(default = "one")]
    pub count: u32,
}

fn one() -> u32 {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedCap {
    /// Use the bundle's calibration, unbounded when absent.
    #[default]
    Calibrated,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CapChoice {
    PerServer(f64),
    Named(NamedCap),
}

impl Default for CapChoice {
    fn default() -> Self {
        Self::Named(NamedCap::Calibrated)
    }
}

/// Which bundle models to use, plus explicit overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelChoices {
    pub step_time_variant: StepTimeVariant,
    /// Steps/sec per GPU name; wins over the step-time model.
    pub worker_speeds: BTreeMap<String, f64>,
    pub checkpoint_variant: CheckpointVariant,
    /// T_c override.
    pub checkpoint_sec: Option<f64>,
    /// T_p override.
    pub startup_sec: Option<f64>,
    /// T_s override.
    pub replacement_sec: Option<f64>,
    pub ps_cap: CapChoice,
    /// When false, no revocations are predicted or simulated.
    #[serde(default = "yes")]
    pub revocations: bool,
    pub refine: bool,
}

impl Default for ModelChoices {
    fn default() -> Self {
        Self {
            step_time_variant: StepTimeVariant::GpuLinear,
            worker_speeds: BTreeMap::new(),
            checkpoint_variant: CheckpointVariant::Univariate,
            checkpoint_sec: None,
            startup_sec: None,
            replacement_sec: None,
            ps_cap: CapChoice::default(),
            revocations: true,
            refine: false,
        }
    }
}

/// A TOML scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub cnn: String,
    /// Needed when the bundle has no entry for `cnn`.
    #[serde(default)]
    pub cnn_gflops: Option<f64>,
    pub workload_steps: u64,
    pub checkpoint_interval_steps: u64,
    #[serde(default = "one")]
    pub ps_count: u32,
    #[serde(default)]
    pub chief_mode: ChiefMode,
    #[serde(default)]
    pub replacement_policy: ReplacementPolicy,
    #[serde(default)]
    pub replacement_worker: Option<WorkerSpec>,
    pub workers: Vec<WorkerGroup>,
    #[serde(default)]
    pub models: ModelChoices,
    #[serde(default)]
    pub options: SimOptions,
}

/// A scenario with every model quantity looked up.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedScenario {
    pub config: ClusterConfig,
    pub models: SimModels,
    /// Steps/sec of each configured worker.
    pub worker_speeds: Vec<f64>,
    /// T_p
    pub startup_sec: f64,
    /// T_s
    pub replacement_sec: f64,
    pub revocations: bool,
    pub refine: bool,
}

fn coverage(msg: String) -> DataError {
    DataError::Coverage(msg)
}

fn check_nonneg(name: &str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(DataError::Scenario(format!("{name} must be nonnegative, got {v}")))
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| DataError::Scenario(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read_text(path)?).map_err(|e| match e {
            DataError::Scenario(m) => DataError::Scenario(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn worker_specs(&self) -> Vec<WorkerSpec> {
        self.workers
            .iter()
            .flat_map(|g| std::iter::repeat_n(WorkerSpec::new(&g.gpu_name, &g.region), g.count as usize))
            .collect()
    }

    fn cnn_model(&self, bundle: &ModelBundle) -> Result<CnnModel> {
        if let Some(g) = self.cnn_gflops {
            return Ok(CnnModel::new(&self.cnn, g)?);
        }
        bundle
            .cnns
            .get(&self.cnn)
            .cloned()
            .ok_or_else(|| coverage(format!("no complexity for CNN {}; set cnn_gflops", self.cnn)))
    }

    fn gpu_speed(&self, bundle: &ModelBundle, cnn: &CnnModel, gpu: &str) -> Result<f64> {
        if let Some(&s) = self.models.worker_speeds.get(gpu) {
            if s > 0.0 && s.is_finite() {
                return Ok(s);
            }
            return Err(DataError::Scenario(format!("worker speed for {gpu} must be positive, got {s}")));
        }
        let variant = self.models.step_time_variant;
        let model = bundle
            .step_model(variant, gpu)
            .ok_or_else(|| coverage(format!("no step-time model {variant} for {gpu}")))?;
        let spec = bundle.gpus.get(gpu).ok_or_else(|| coverage(format!("no GPU spec for {gpu}")))?;
        Ok(predict_worker_speed(model, cnn, spec)?)
    }

    fn checkpoint_sec(&self, bundle: &ModelBundle) -> Result<f64> {
        if let Some(t) = self.models.checkpoint_sec {
            return check_nonneg("checkpoint_sec", t);
        }
        let variant = self.models.checkpoint_variant;
        let model =
            bundle.checkpoint_model(variant).ok_or_else(|| coverage(format!("no checkpoint model {variant}")))?;
        let files = bundle
            .checkpoint_files
            .get(&self.cnn)
            .ok_or_else(|| coverage(format!("no checkpoint file sizes for CNN {}", self.cnn)))?;
        Ok(predict_checkpoint_time(model, files)?)
    }

    fn ps_cap(&self, bundle: &ModelBundle) -> Result<PsCapacity> {
        match self.models.ps_cap {
            CapChoice::PerServer(v) => PsCapacity::new(v).map_err(|e| DataError::Scenario(e.to_string())),
            CapChoice::Named(NamedCap::Unbounded) => Ok(PsCapacity::unbounded()),
            CapChoice::Named(NamedCap::Calibrated) => {
                Ok(bundle.ps_capacity(&self.cnn, self.ps_count).unwrap_or_else(PsCapacity::unbounded))
            }
        }
    }

    /// Looks every quantity up in `bundle`, naming whichever one is missing.
    pub fn resolve(&self, bundle: &ModelBundle) -> Result<ResolvedScenario> {
        let cnn = self.cnn_model(bundle)?;
        let workers = self.worker_specs();
        let config = ClusterConfig {
            workers: workers.clone(),
            ps_count: self.ps_count,
            cnn: cnn.clone(),
            workload_steps: self.workload_steps,
            checkpoint_interval_steps: self.checkpoint_interval_steps,
            chief_mode: self.chief_mode,
            replacement_policy: self.replacement_policy,
            replacement_worker: self.replacement_worker.clone(),
            seed: self.seed,
            options: self.options.clone(),
        };
        config.validate().map_err(|e| DataError::Scenario(e.to_string()))?;

        let mut speeds = BTreeMap::new();
        let replacement_gpus = workers.iter().filter_map(|w| config.replacement_for(w)).map(|w| w.gpu_name);
        for gpu in workers.iter().map(|w| w.gpu_name.clone()).chain(replacement_gpus) {
            if let Entry::Vacant(e) = speeds.entry(gpu) {
                let s = self.gpu_speed(bundle, &cnn, e.key())?;
                e.insert(s);
            }
        }
        let worker_speeds = workers.iter().map(|w| speeds[&w.gpu_name]).collect();
        let revocations = self.models.revocations;

        if revocations {
            for w in &workers {
                if bundle.lifetimes.get(&w.gpu_name, &w.region).is_none() {
                    return Err(coverage(format!("no lifetime distribution for {}/{}", w.gpu_name, w.region)));
                }
            }
        }

        let (startup, startup_sec) = match self.models.startup_sec {
            Some(t) => (StartupSource::Fixed(check_nonneg("startup_sec", t)?), t),
            // Nothing is ever replaced without revocations.
            None if !revocations => (StartupSource::Fixed(0.0), 0.0),
            None => {
                // T_p is the running average of each worker's startup history.
                let mut total = 0.0;
                for w in &workers {
                    let m = bundle
                        .startups
                        .lookup(&w.gpu_name, &w.region, Offering::Transient)
                        .map_err(|_| coverage(format!("no startup model for {}/{}", w.gpu_name, w.region)))?;
                    let avg = RunningAverage::from_observations(m.samples().iter().map(|s| s.iter().sum::<f64>()));
                    total += avg.value().unwrap_or(0.0);
                }
                (StartupSource::Table(bundle.startups.clone()), total / workers.len() as f64)
            }
        };

        let (replacement, replacement_sec) = match self.models.replacement_sec {
            Some(t) => (OverheadSource::Fixed(check_nonneg("replacement_sec", t)?), t),
            None if !revocations => (OverheadSource::Fixed(0.0), 0.0),
            None => {
                let t = replacement_overhead(&bundle.replacement, &self.cnn, StartKind::Cold)
                    .map_err(|_| coverage(format!("no replacement overhead for CNN {}", self.cnn)))?;
                (OverheadSource::Model(bundle.replacement.clone()), t)
            }
        };

        let models = SimModels {
            worker_speeds: speeds,
            checkpoint_sec: self.checkpoint_sec(bundle)?,
            lifetimes: bundle.lifetimes.clone(),
            startup,
            replacement,
            ps_cap: self.ps_cap(bundle)?,
        };
        Ok(ResolvedScenario {
            config,
            models,
            worker_speeds,
            startup_sec,
            replacement_sec,
            revocations,
            refine: self.models.refine,
        })
    }
}

impl ResolvedScenario {
    pub fn prediction_inputs(&self) -> PredictionInputs<'_> {
        let lifetimes = self.revocations.then(|| {
            self.config
                .workers
                .iter()
                .map(|w| self.models.lifetimes.get(&w.gpu_name, &w.region).expect("checked during resolve"))
                .collect::<Vec<&LifetimeDistribution>>()
        });
        PredictionInputs {
            worker_speeds: self.worker_speeds.clone(),
            ps_count: self.config.ps_count,
            ps_cap: self.models.ps_cap,
            workload_steps: self.config.workload_steps,
            checkpoint_interval_steps: self.config.checkpoint_interval_steps,
            checkpoint_sec: self.models.checkpoint_sec,
            startup_sec: self.startup_sec,
            replacement_sec: self.replacement_sec,
            lifetimes,
            refine: self.refine,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advisor::predict_training_time;

    const BASIC: &str = r#"
seed = 7
cnn = "ResNet-32"
cnn_gflops = 1.54
workload_steps = 64000
checkpoint_interval_steps = 4000

[[workers]]
gpu_name = "K80"
region = "us-west1"

[models]
worker_speeds = { K80 = 4.56 }
checkpoint_sec = 3.84
revocations = false
"#;

    #[test]
    fn worked_example_scenario() {
        let s = Scenario::from_toml(BASIC).unwrap();
        let r = s.resolve(&ModelBundle::default()).unwrap();
        let p = predict_training_time(&r.prediction_inputs()).unwrap();
        assert!((p.total_time_sec - 14096.53).abs() < 0.005);
        assert_eq!(r.config.workers.len(), 1);
        assert!(!r.models.ps_cap.is_bounded());
    }

    #[test]
    fn coverage_gaps_are_named() {
        let text = BASIC.replace("revocations = false", "revocations = true").replace("us-west1", "asia-east1");
        let err = Scenario::from_toml(&text).unwrap().resolve(&ModelBundle::default()).unwrap_err();
        assert_eq!(err.to_string(), "no lifetime distribution for K80/asia-east1");
        let text = BASIC.replace("worker_speeds = { K80 = 4.56 }", "");
        let err = Scenario::from_toml(&text).unwrap().resolve(&ModelBundle::default()).unwrap_err();
        assert_eq!(err.to_string(), "no step-time model gpu-linear for K80");
    }

    #[test]
    fn cap_choices_parse() {
        let text = BASIC.replace("revocations = false", "revocations = false\nps_cap = 40.0");
        let r = Scenario::from_toml(&text).unwrap().resolve(&ModelBundle::default()).unwrap();
        assert_eq!(r.models.ps_cap.max_aggregate_steps_per_sec, 40.0);
        let text = BASIC.replace("revocations = false", "revocations = false\nps_cap = \"unbounded\"");
        assert!(Scenario::from_toml(&text).is_ok());
        let text = BASIC.replace("revocations = false", "revocations = false\nps_cap = \"huge\"");
        assert!(Scenario::from_toml(&text).is_err());
        assert!(Scenario::from_toml(&BASIC.replace("seed = 7", "seed = 7\nbogus = 1")).is_err());
    }
}
