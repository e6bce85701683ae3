use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_svr, mae, Dataset, KernelSpec, RegressionError, Regressor, Result, SvrHyperParams};

pub const DEFAULT_FOLDS: usize = 5;

/// Per-fold held-out MAE and its summary. `std_mae` is the population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub fold_maes: Vec<f64>,
    pub mean_mae: f64,
    pub std_mae: f64,
}

impl CvReport {
    fn from_folds(fold_maes: Vec<f64>) -> Self {
        let k = fold_maes.len() as f64;
        let mean_mae = fold_maes.iter().sum::<f64>() / k;
        let var = fold_maes.iter().map(|m| (m - mean_mae).powi(2)).sum::<f64>() / k;
        Self { fold_maes, mean_mae, std_mae: var.sqrt() }
    }
}

fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

/// Contiguous folds over a seeded shuffle; fold sizes differ by at most one.
fn folds(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let idx = shuffled_indices(n, seed);
    let (base, extra) = (n / k, n % k);
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        out.push(idx[start..start + len].to_vec());
        start += len;
    }
    out
}

/// k-fold cross-validated MAE of the models produced by `fitter`.
pub fn kfold_mae<M, F>(data: &Dataset, k: usize, seed: u64, fitter: F) -> Result<CvReport>
where
    M: Regressor,
    F: Fn(&Dataset) -> Result<M>,
{
    let n = data.n_samples();
    if k < 2 {
        return Err(RegressionError::InvalidParameter(format!("k must be at least 2, got {k}")));
    }
    if k > n {
        return Err(RegressionError::TooFewSamples { needed: k, got: n });
    }
    let folds = folds(n, k, seed);
    let mut fold_maes = Vec::with_capacity(k);
    for (f, held_out) in folds.iter().enumerate() {
        let train_idx: Vec<usize> =
            folds.iter().enumerate().filter(|&(g, _)| g != f).flat_map(|(_, fold)| fold.iter().copied()).collect();
        let model = fitter(&data.subset(&train_idx))?;
        let test = data.subset(held_out);
        let preds = model.predict_many(test.features())?;
        fold_maes.push(mae(&preds, test.targets())?);
    }
    Ok(CvReport::from_folds(fold_maes))
}

/// Seeded 4:1 split; the training side gets ⌈0.8 N⌉ rows.
pub fn split_train_test(data: &Dataset, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = data.n_samples();
    if n < 5 {
        return Err(RegressionError::TooFewSamples { needed: 5, got: n });
    }
    let idx = shuffled_indices(n, seed);
    let n_train = (4 * n).div_ceil(5);
    Ok((data.subset(&idx[..n_train]), data.subset(&idx[n_train..])))
}

/// Penalties 10, 20, …, 100.
pub fn default_penalty_grid() -> Vec<f64> {
    (1..=10).map(|i| f64::from(i) * 10.0).collect()
}

/// Tube widths 0.01, 0.02, …, 0.10.
pub fn default_epsilon_grid() -> Vec<f64> {
    (1..=10).map(|i| f64::from(i) / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchOutcome {
    pub best: SvrHyperParams,
    pub report: CvReport,
    /// Grid points whose fit failed, with the error message.
    pub failures: Vec<(SvrHyperParams, String)>,
}

/// Exhaustive grid search over (penalty, epsilon) by k-fold MAE.
///
/// Grid points are evaluated in parallel; the winner is the lowest mean MAE,
/// ties going to the smaller penalty and then the smaller epsilon.
pub fn grid_search_svr(
    data: &Dataset,
    kernel: KernelSpec,
    penalty_grid: &[f64],
    epsilon_grid: &[f64],
    k: usize,
    seed: u64,
) -> Result<GridSearchOutcome> {
    if penalty_grid.is_empty() || epsilon_grid.is_empty() {
        return Err(RegressionError::InvalidParameter("empty hyperparameter grid".into()));
    }
    let mut candidates = Vec::with_capacity(penalty_grid.len() * epsilon_grid.len());
    for &p in penalty_grid {
        for &e in epsilon_grid {
            candidates.push(SvrHyperParams::new(p, e)?);
        }
    }
    candidates.sort_by(|a, b| a.penalty.total_cmp(&b.penalty).then(a.epsilon_tube.total_cmp(&b.epsilon_tube)));

    let results: Vec<(SvrHyperParams, Result<CvReport>)> =
        candidates.par_iter().map(|&hp| (hp, kfold_mae(data, k, seed, |d| fit_svr(d, kernel, hp)))).collect();

    let mut best: Option<(SvrHyperParams, CvReport)> = None;
    let mut failures = Vec::new();
    for (hp, res) in results {
        match res {
            Ok(report) => {
                if best.as_ref().is_none_or(|(_, b)| report.mean_mae < b.mean_mae) {
                    best = Some((hp, report));
                }
            }
            Err(e) => failures.push((hp, e.to_string())),
        }
    }
    match best {
        Some((best, report)) => Ok(GridSearchOutcome { best, report, failures }),
        None => Err(RegressionError::AllGridPointsFailed(failures[0].1.clone())),
    }
}

#[cfg(test)]
mod tests {
    use super::super::fit_linear;
    use super::*;

    fn line(n: usize) -> Dataset {
        let xs: Vec<f64> = (0..n).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        Dataset::univariate(&xs, &ys).unwrap()
    }

    #[test]
    fn perfect_linear_data_has_zero_cv_error() {
        for k in [2, 3, 5, 10] {
            let r = kfold_mae(&line(10), k, 7, fit_linear).unwrap();
            assert!(r.mean_mae < 1e-9, "k={k}: {r:?}");
            assert_eq!(r.fold_maes.len(), k);
        }
    }

    #[test]
    fn kfold_is_deterministic_and_validates_k() {
        let a = kfold_mae(&line(9), 3, 11, fit_linear).unwrap();
        let b = kfold_mae(&line(9), 3, 11, fit_linear).unwrap();
        assert_eq!(a, b);
        assert!(kfold_mae(&line(4), 5, 0, fit_linear).is_err());
        assert!(kfold_mae(&line(4), 1, 0, fit_linear).is_err());
    }

    #[test]
    fn folds_partition_the_rows() {
        let f = folds(17, 5, 3);
        let mut all: Vec<usize> = f.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..17).collect::<Vec<_>>());
        assert!(f.iter().all(|fold| fold.len() == 3 || fold.len() == 4));
    }

    #[test]
    fn split_sizes_and_partition() {
        let data = line(20);
        let (train, test) = split_train_test(&data, 5).unwrap();
        assert_eq!((train.n_samples(), test.n_samples()), (16, 4));
        let mut ys: Vec<f64> = train.targets().iter().chain(test.targets()).copied().collect();
        ys.sort_by(f64::total_cmp);
        let mut orig = data.targets().to_vec();
        orig.sort_by(f64::total_cmp);
        assert_eq!(ys, orig);
        assert_eq!(split_train_test(&data, 5).unwrap(), (train, test));
        assert!(split_train_test(&line(4), 0).is_err());
        let (tr, te) = split_train_test(&line(7), 1).unwrap();
        assert_eq!((tr.n_samples(), te.n_samples()), (6, 1));
    }

    #[test]
    fn default_grid_has_one_hundred_points() {
        let p = default_penalty_grid();
        let e = default_epsilon_grid();
        assert_eq!(p.len() * e.len(), 100);
        assert_eq!((p[0], p[9]), (10.0, 100.0));
        assert_eq!((e[0], e[9]), (0.01, 0.1));
    }

    #[test]
    fn single_point_grid() {
        let out = grid_search_svr(&line(10), KernelSpec::rbf(1.0).unwrap(), &[10.0], &[0.05], 5, 1).unwrap();
        assert_eq!(out.best, SvrHyperParams { penalty: 10.0, epsilon_tube: 0.05 });
        assert!(grid_search_svr(&line(10), KernelSpec::Polynomial2, &[], &[0.1], 5, 1).is_err());
    }
}
