use std::fmt;

use serde::{Deserialize, Serialize};

use super::step_time::{evaluate_raw, fit_svr_model};
use super::{FitOptions, FitReport, InnerModel, PerfError, Result};
use crate::regression::{fit_linear, fit_pca2, Dataset, MinMaxScaler, PcaTransform, Regressor, SvrHyperParams};

/// Sizes in megabytes of the three files a checkpoint writes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointFiles {
    pub data_mb: f64,
    pub meta_mb: f64,
    pub index_mb: f64,
}

impl CheckpointFiles {
    pub fn new(data_mb: f64, meta_mb: f64, index_mb: f64) -> Result<Self> {
        for (name, v) in [("data_mb", data_mb), ("meta_mb", meta_mb), ("index_mb", index_mb)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(PerfError::InvalidInput(format!("{name} must be a nonnegative finite size, got {v}")));
            }
        }
        Ok(Self { data_mb, meta_mb, index_mb })
    }

    /// S_c, the total size.
    pub fn total_mb(&self) -> f64 {
        self.data_mb + self.meta_mb + self.index_mb
    }

    fn raw(&self) -> Vec<f64> {
        vec![self.data_mb, self.meta_mb, self.index_mb]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { data_mb: self.data_mb * factor, meta_mb: self.meta_mb * factor, index_mb: self.index_mb * factor }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointObservation {
    pub cnn_name: String,
    pub files: CheckpointFiles,
    pub checkpoint_sec: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckpointVariant {
    Univariate,
    Multivariate,
    Pca2Multivariate,
    SvrRbf,
}

impl CheckpointVariant {
    pub const ALL: [CheckpointVariant; 4] = [
        CheckpointVariant::Univariate,
        CheckpointVariant::Multivariate,
        CheckpointVariant::Pca2Multivariate,
        CheckpointVariant::SvrRbf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Univariate => "univariate",
            Self::Multivariate => "multivariate",
            Self::Pca2Multivariate => "pca2-multivariate",
            Self::SvrRbf => "svr-rbf",
        }
    }

    pub fn input_feature(self) -> &'static str {
        match self {
            Self::Univariate => "S_c",
            Self::Multivariate => "S_d, S_m",
            Self::Pca2Multivariate => "PCA2(S_d, S_m, S_i)",
            Self::SvrRbf => "S_c",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Univariate => "(i) Univariate",
            Self::Multivariate => "(ii) Multivariate",
            Self::Pca2Multivariate => "(iii) Multivariate with PCA",
            Self::SvrRbf => "(iv) SVR RBF Kernel",
        }
    }

    fn features(self, raw: &[f64]) -> Vec<f64> {
        match self {
            Self::Univariate | Self::SvrRbf => vec![raw[0] + raw[1] + raw[2]],
            Self::Multivariate => vec![raw[0], raw[1]],
            Self::Pca2Multivariate => raw.to_vec(),
        }
    }
}

impl fmt::Display for CheckpointVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CheckpointVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL.into_iter().find(|v| v.as_str() == s).ok_or_else(|| format!("unknown checkpoint variant {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointTimeModel {
    pub variant: CheckpointVariant,
    pub inner: InnerModel,
    pub pca: Option<PcaTransform>,
    pub scaler: Option<MinMaxScaler>,
    pub hyper: Option<SvrHyperParams>,
}

impl CheckpointTimeModel {
    fn predict_raw(&self, raw: &[f64]) -> crate::regression::Result<f64> {
        let mut x = self.variant.features(raw);
        if let Some(pca) = &self.pca {
            x = pca.apply(&x)?.to_vec();
        }
        if let Some(s) = &self.scaler {
            x = s.apply(&x)?;
        }
        self.inner.predict(&x)
    }
}

/// Takes raw `[S_d, S_m, S_i]` rows and skips the sign check.
impl Regressor for CheckpointTimeModel {
    fn n_features(&self) -> usize {
        3
    }

    fn predict(&self, x: &[f64]) -> crate::regression::Result<f64> {
        crate::regression::check_dim(3, x.len())?;
        self.predict_raw(x)
    }
}

fn raw_dataset(records: &[CheckpointObservation]) -> Result<Dataset> {
    if records.is_empty() {
        return Err(PerfError::InvalidInput("no checkpoint observations".into()));
    }
    let rows = records.iter().map(|r| r.files.raw()).collect();
    let targets = records.iter().map(|r| r.checkpoint_sec).collect();
    Ok(Dataset::new(rows, targets)?)
}

fn fit_raw(raw: &Dataset, variant: CheckpointVariant, opts: &FitOptions, seed: u64) -> Result<CheckpointTimeModel> {
    let features = raw.map_features(|r| variant.features(r))?;
    match variant {
        CheckpointVariant::Univariate | CheckpointVariant::Multivariate => Ok(CheckpointTimeModel {
            variant,
            inner: InnerModel::Linear(fit_linear(&features)?),
            pca: None,
            scaler: None,
            hyper: None,
        }),
        CheckpointVariant::Pca2Multivariate => {
            let pca = fit_pca2(&features)?;
            let projected = features.map_features(|r| pca.apply(r).map(|z| z.to_vec()).unwrap_or_default())?;
            Ok(CheckpointTimeModel {
                variant,
                inner: InnerModel::Linear(fit_linear(&projected)?),
                pca: Some(pca),
                scaler: None,
                hyper: None,
            })
        }
        CheckpointVariant::SvrRbf => {
            let scaler = MinMaxScaler::fit_dataset(&features);
            let scaled = scaler.transform(&features)?;
            let opts = FitOptions { k: opts.k.min(scaled.n_samples()), ..opts.clone() };
            let (m, hp) = fit_svr_model(&scaled, true, &opts, seed)?;
            Ok(CheckpointTimeModel {
                variant,
                inner: InnerModel::Svr(m),
                pca: None,
                scaler: Some(scaler),
                hyper: Some(hp),
            })
        }
    }
}

/// Fits one checkpoint-time model variant on all `records`.
pub fn fit_checkpoint_model(
    records: &[CheckpointObservation],
    variant: CheckpointVariant,
    opts: &FitOptions,
    seed: u64,
) -> Result<CheckpointTimeModel> {
    fit_raw(&raw_dataset(records)?, variant, opts, seed)
}

/// Predicted checkpoint duration T_c in seconds.
pub fn predict_checkpoint_time(model: &CheckpointTimeModel, files: &CheckpointFiles) -> Result<f64> {
    let value = model.predict_raw(&files.raw())?;
    if !(value > 0.0 && value.is_finite()) {
        return Err(PerfError::Extrapolation {
            quantity: "checkpoint time",
            value,
            subject: format!("S_c = {} MB", files.total_mb()),
        });
    }
    Ok(value)
}

/// Seeded 4:1 split with k-fold CV on the training side.
pub fn evaluate_checkpoint_variant(
    records: &[CheckpointObservation],
    variant: CheckpointVariant,
    opts: &FitOptions,
    seed: u64,
) -> Result<FitReport> {
    let raw = raw_dataset(records)?;
    let ev = evaluate_raw(&raw, opts.k, seed, |d, k| fit_raw(d, variant, &FitOptions { k, ..opts.clone() }, seed))?;
    Ok(FitReport {
        model_label: variant.label().into(),
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

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(d: f64, m: f64, i: f64, t: f64) -> CheckpointObservation {
        CheckpointObservation { cnn_name: "x".into(), files: CheckpointFiles::new(d, m, i).unwrap(), checkpoint_sec: t }
    }

    fn collinear() -> Vec<CheckpointObservation> {
        [1.0, 2.0, 4.0, 7.0, 11.0, 16.0]
            .iter()
            .enumerate()
            .map(|(j, &d)| {
                let m = 0.3 * d + 0.1 * j as f64;
                let i = 0.01 * d;
                obs(d, m, i, 2.0 + 0.05 * (d + m + i))
            })
            .collect()
    }

    #[test]
    fn univariate_exact_on_collinear_data() {
        let recs = collinear();
        let m = fit_checkpoint_model(&recs, CheckpointVariant::Univariate, &FitOptions::default(), 1).unwrap();
        for r in &recs {
            assert!((predict_checkpoint_time(&m, &r.files).unwrap() - r.checkpoint_sec).abs() < 1e-9);
        }
        let zero = CheckpointFiles::new(0.0, 0.0, 0.0).unwrap();
        assert!((predict_checkpoint_time(&m, &zero).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn doubling_adds_slope_times_size() {
        let m = fit_checkpoint_model(&collinear(), CheckpointVariant::Univariate, &FitOptions::default(), 1).unwrap();
        let f = CheckpointFiles::new(3.0, 1.0, 0.05).unwrap();
        let a = predict_checkpoint_time(&m, &f).unwrap();
        let b = predict_checkpoint_time(&m, &f.scaled(2.0)).unwrap();
        assert!((b - a - 0.05 * f.total_mb()).abs() < 1e-9);
    }

    #[test]
    fn pca_variant_carries_transform() {
        let m =
            fit_checkpoint_model(&collinear(), CheckpointVariant::Pca2Multivariate, &FitOptions::default(), 1).unwrap();
        assert!(m.pca.is_some());
        let u = fit_checkpoint_model(&collinear(), CheckpointVariant::Univariate, &FitOptions::default(), 1).unwrap();
        assert!(u.pca.is_none());
    }

    #[test]
    fn negative_sizes_rejected() {
        assert!(CheckpointFiles::new(-1.0, 0.0, 0.0).is_err());
    }
}
