//! Fitting machinery shared by the step-time and checkpoint-time models:
//! ordinary least squares, epsilon-SVR solved by SMO, min-max scaling,
//! two-component PCA, k-fold cross validation and grid search.

mod dataset;
mod kernel;
mod linear;
mod metrics;
mod pca;
mod scaling;
mod svr;
mod validation;

pub use dataset::Dataset;
pub use kernel::KernelSpec;
pub use linear::{fit_linear, LinearModel, MAX_CONDITION_NUMBER};
pub use metrics::{mae, mape};
pub use pca::{fit_pca2, PcaTransform};
pub use scaling::MinMaxScaler;
pub use svr::{fit_svr, fit_svr_with, SvrHyperParams, SvrModel, SvrOptions};
pub use validation::{
    default_epsilon_grid, default_penalty_grid, grid_search_svr, kfold_mae, split_train_test, CvReport,
    GridSearchOutcome, DEFAULT_FOLDS,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegressionError {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("dimension mismatch: model expects {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("design matrix is singular (condition number {condition:.3e}); offending columns {columns:?}")]
    Singular { columns: Vec<usize>, condition: f64 },
    #[error("SMO did not converge after {iterations} iterations (max KKT violation {max_violation:.3e})")]
    Convergence { iterations: usize, max_violation: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("target {index} is zero; MAPE is undefined")]
    ZeroTarget { index: usize },
    #[error("every grid point failed; first failure: {0}")]
    AllGridPointsFailed(String),
}

pub type Result<T> = std::result::Result<T, RegressionError>;

/// A fitted model that maps a feature vector to a prediction.
pub trait Regressor {
    fn n_features(&self) -> usize;

    fn predict(&self, x: &[f64]) -> Result<f64>;

    fn predict_many(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict(r)).collect()
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(RegressionError::DimensionMismatch { expected, got })
    }
}
