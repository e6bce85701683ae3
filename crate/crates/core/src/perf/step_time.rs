use std::fmt;

use serde::{Deserialize, Serialize};

use super::{CnnModel, GpuSpec, PerfError, Result};
use crate::regression::{
    default_epsilon_grid, default_penalty_grid, fit_linear, fit_svr, grid_search_svr, kfold_mae, mae, mape,
    split_train_test, CvReport, Dataset, KernelSpec, LinearModel, MinMaxScaler, Regressor, SvrHyperParams, SvrModel,
    DEFAULT_FOLDS,
};

/// One measured average step time.
#[derive(Debug, Clone, PartialEq)]
pub struct StepObservation {
    pub cnn: CnnModel,
    pub gpu: GpuSpec,
    pub step_time_sec: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepTimeVariant {
    AgnosticUnivariate,
    AgnosticMultivariate,
    GpuLinear,
    GpuSvrPoly,
    GpuSvrRbf,
}

impl StepTimeVariant {
    pub const ALL: [StepTimeVariant; 5] = [
        StepTimeVariant::AgnosticUnivariate,
        StepTimeVariant::AgnosticMultivariate,
        StepTimeVariant::GpuLinear,
        StepTimeVariant::GpuSvrPoly,
        StepTimeVariant::GpuSvrRbf,
    ];

    pub fn is_gpu_specific(self) -> bool {
        matches!(self, Self::GpuLinear | Self::GpuSvrPoly | Self::GpuSvrRbf)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::AgnosticUnivariate => "agnostic-univariate",
            Self::AgnosticMultivariate => "agnostic-multivariate",
            Self::GpuLinear => "gpu-linear",
            Self::GpuSvrPoly => "gpu-svr-poly",
            Self::GpuSvrRbf => "gpu-svr-rbf",
        }
    }

    pub fn input_feature(self) -> &'static str {
        match self {
            Self::AgnosticUnivariate => "C_norm",
            Self::AgnosticMultivariate => "C_m, C_gpu",
            _ => "C_m",
        }
    }

    /// Human-readable row label for fit reports.
    pub fn label(self, gpu: Option<&str>) -> String {
        let gpu = gpu.unwrap_or("?");
        match self {
            Self::AgnosticUnivariate => "Univariate, GPU-agnostic".into(),
            Self::AgnosticMultivariate => "Multivariate, GPU-agnostic".into(),
            Self::GpuLinear => format!("Univariate, {gpu}"),
            Self::GpuSvrPoly => format!("SVR Polynomial Kernel, {gpu}"),
            Self::GpuSvrRbf => format!("SVR RBF Kernel, {gpu}"),
        }
    }
}

impl fmt::Display for StepTimeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StepTimeVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL.into_iter().find(|v| v.as_str() == s).ok_or_else(|| format!("unknown step-time variant {s:?}"))
    }
}

/// Either kind of fitted regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InnerModel {
    Linear(LinearModel),
    Svr(SvrModel),
}

impl Regressor for InnerModel {
    fn n_features(&self) -> usize {
        match self {
            InnerModel::Linear(m) => m.n_features(),
            InnerModel::Svr(m) => m.n_features(),
        }
    }

    fn predict(&self, x: &[f64]) -> crate::regression::Result<f64> {
        match self {
            InnerModel::Linear(m) => m.predict(x),
            InnerModel::Svr(m) => m.predict(x),
        }
    }
}

/// Knobs shared by the step-time and checkpoint fitters.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub k: usize,
    pub penalty_grid: Vec<f64>,
    pub epsilon_grid: Vec<f64>,
    /// Skip the grid search and use these hyperparameters.
    pub hyper: Option<SvrHyperParams>,
    /// RBF width; defaults to the median pairwise distance of the scaled inputs.
    pub rbf_sigma: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            k: DEFAULT_FOLDS,
            penalty_grid: default_penalty_grid(),
            epsilon_grid: default_epsilon_grid(),
            hyper: None,
            rbf_sigma: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTimeModel {
    pub variant: StepTimeVariant,
    pub gpu_scope: Option<String>,
    pub inner: InnerModel,
    pub scaler: Option<MinMaxScaler>,
    pub hyper: Option<SvrHyperParams>,
}

/// Variant features from a raw `[C_m GFLOPs, C_gpu TFLOPS]` row.
fn variant_features(variant: StepTimeVariant, raw: &[f64]) -> Vec<f64> {
    match variant {
        StepTimeVariant::AgnosticUnivariate => {
            vec![raw[0] / raw[1] * (super::FLOPS_PER_GFLOP / super::FLOPS_PER_TFLOP)]
        }
        StepTimeVariant::AgnosticMultivariate => raw.to_vec(),
        _ => vec![raw[0]],
    }
}

fn raw_row(cnn: &CnnModel, gpu: &GpuSpec) -> Vec<f64> {
    vec![cnn.complexity_gflops, gpu.capacity_tflops]
}

pub(crate) fn fit_svr_model(
    data: &Dataset,
    kernel_is_rbf: bool,
    opts: &FitOptions,
    seed: u64,
) -> Result<(SvrModel, SvrHyperParams)> {
    let kernel = if kernel_is_rbf {
        match opts.rbf_sigma {
            Some(s) => KernelSpec::rbf(s)?,
            None => KernelSpec::rbf_median_heuristic(data.features()),
        }
    } else {
        KernelSpec::Polynomial2
    };
    let hp = match opts.hyper {
        Some(hp) => hp,
        None => grid_search_svr(data, kernel, &opts.penalty_grid, &opts.epsilon_grid, opts.k, seed)?.best,
    };
    Ok((fit_svr(data, kernel, hp)?, hp))
}

fn check_scope(records: &[StepObservation], variant: StepTimeVariant) -> Result<Option<String>> {
    if records.is_empty() {
        return Err(PerfError::InvalidInput("no step-time observations".into()));
    }
    if !variant.is_gpu_specific() {
        return Ok(None);
    }
    let mut names: Vec<String> = records.iter().map(|r| r.gpu.name.clone()).collect();
    names.sort();
    names.dedup();
    if names.len() > 1 {
        return Err(PerfError::MixedGpus { variant: variant.to_string(), found: names });
    }
    Ok(names.pop())
}

fn raw_dataset(records: &[StepObservation]) -> Result<Dataset> {
    let rows = records.iter().map(|r| raw_row(&r.cnn, &r.gpu)).collect();
    let targets = records.iter().map(|r| r.step_time_sec).collect();
    Ok(Dataset::new(rows, targets)?)
}

fn fit_raw(
    raw: &Dataset,
    variant: StepTimeVariant,
    gpu_scope: Option<String>,
    opts: &FitOptions,
    seed: u64,
) -> Result<StepTimeModel> {
    let features = raw.map_features(|r| variant_features(variant, r))?;
    let scaler = (variant != StepTimeVariant::AgnosticMultivariate).then(|| MinMaxScaler::fit_dataset(&features));
    let data = match &scaler {
        Some(s) => s.transform(&features)?,
        None => features,
    };
    let (inner, hyper) = match variant {
        StepTimeVariant::AgnosticUnivariate | StepTimeVariant::AgnosticMultivariate | StepTimeVariant::GpuLinear => {
            (InnerModel::Linear(fit_linear(&data)?), None)
        }
        StepTimeVariant::GpuSvrPoly | StepTimeVariant::GpuSvrRbf => {
            let (m, hp) = fit_svr_model(&data, variant == StepTimeVariant::GpuSvrRbf, opts, seed)?;
            (InnerModel::Svr(m), Some(hp))
        }
    };
    Ok(StepTimeModel { variant, gpu_scope, inner, scaler, hyper })
}

/// Fits one step-time model variant on all `records`.
///
/// The agnostic univariate variant min-max scales the computation ratio over
/// every record; the GPU-specific variants scale C_m; the agnostic
/// multivariate variant uses raw (C_m, C_gpu).
pub fn fit_step_time_model(
    records: &[StepObservation],
    variant: StepTimeVariant,
    opts: &FitOptions,
    seed: u64,
) -> Result<StepTimeModel> {
    let gpu_scope = check_scope(records, variant)?;
    fit_raw(&raw_dataset(records)?, variant, gpu_scope, opts, seed)
}

impl StepTimeModel {
    fn predict_raw(&self, raw: &[f64]) -> crate::regression::Result<f64> {
        let x = variant_features(self.variant, raw);
        let x = match &self.scaler {
            Some(s) => s.apply(&x)?,
            None => x,
        };
        self.inner.predict(&x)
    }
}

/// Takes raw `[C_m, C_gpu]` rows and skips the scope and sign checks.
impl Regressor for StepTimeModel {
    fn n_features(&self) -> usize {
        2
    }

    fn predict(&self, x: &[f64]) -> crate::regression::Result<f64> {
        crate::regression::check_dim(2, x.len())?;
        self.predict_raw(x)
    }
}

/// Predicted step time in seconds. Non-positive predictions are errors.
pub fn predict_step_time(model: &StepTimeModel, cnn: &CnnModel, gpu: &GpuSpec) -> Result<f64> {
    if let Some(scope) = &model.gpu_scope {
        if *scope != gpu.name {
            return Err(PerfError::GpuScope { expected: scope.clone(), got: gpu.name.clone() });
        }
    }
    let value = model.predict_raw(&raw_row(cnn, gpu))?;
    if !(value > 0.0 && value.is_finite()) {
        return Err(PerfError::Extrapolation {
            quantity: "step time",
            value,
            subject: format!("{} on {}", cnn.name, gpu.name),
        });
    }
    Ok(value)
}

/// Steps per second, the reciprocal of [`predict_step_time`].
pub fn predict_worker_speed(model: &StepTimeModel, cnn: &CnnModel, gpu: &GpuSpec) -> Result<f64> {
    Ok(1.0 / predict_step_time(model, cnn, gpu)?)
}

/// Cross-validation and hold-out scores of one fitted variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model_label: String,
    pub input_feature: String,
    pub k_used: usize,
    pub kfold: CvReport,
    pub test_mae: f64,
    pub test_mape: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub hyper: Option<SvrHyperParams>,
}

/// Splits `raw` 4:1, cross-validates `fit` on the training side and scores the
/// hold-out side. k is reduced to the training-set size when it is larger.
pub(crate) fn evaluate_raw<M, F>(raw: &Dataset, k: usize, seed: u64, fit: F) -> Result<Evaluation<M>>
where
    M: Regressor,
    F: Fn(&Dataset, usize) -> Result<M>,
{
    let (train, test) = split_train_test(raw, seed)?;
    let k_used = k.min(train.n_samples());
    // Non-regression errors would be flattened by kfold_mae; keep the first one.
    let first_err = std::sync::Mutex::new(None);
    let kfold = kfold_mae(&train, k_used, seed, |fold| {
        fit(fold, k_used).map_err(|e| match e {
            PerfError::Regression(r) => r,
            other => {
                let msg = other.to_string();
                first_err.lock().unwrap().get_or_insert(other);
                crate::regression::RegressionError::InvalidParameter(msg)
            }
        })
    });
    if let Some(e) = first_err.into_inner().unwrap() {
        return Err(e);
    }
    let kfold = kfold?;
    let model = fit(&train, k_used)?;
    let preds = model.predict_many(test.features())?;
    let test_mae = mae(&preds, test.targets())?;
    let test_mape = mape(&preds, test.targets())?;
    Ok(Evaluation { kfold, test_mae, test_mape, k_used, n_train: train.n_samples(), n_test: test.n_samples(), model })
}

pub(crate) struct Evaluation<M> {
    pub kfold: CvReport,
    pub test_mae: f64,
    pub test_mape: f64,
    pub k_used: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub model: M,
}

/// Scores one variant with a seeded 4:1 split plus k-fold CV on the training side.
pub fn evaluate_step_time_variant(
    records: &[StepObservation],
    variant: StepTimeVariant,
    opts: &FitOptions,
    seed: u64,
) -> Result<FitReport> {
    let gpu_scope = check_scope(records, variant)?;
    let raw = raw_dataset(records)?;
    let ev = evaluate_raw(&raw, opts.k, seed, |d, k| {
        let o = FitOptions { k: k.min(d.n_samples()), ..opts.clone() };
        fit_raw(d, variant, gpu_scope.clone(), &o, seed)
    })?;
    Ok(FitReport {
        model_label: variant.label(gpu_scope.as_deref()),
        input_feature: variant.input_feature().into(),
        k_used: ev.k_used,
        kfold: ev.kfold,
        test_mae: ev.test_mae,
        test_mape: ev.test_mape,
        n_train: ev.n_train,
        n_test: ev.n_test,
        hyper: ev.model.hyper,
    })
}
