use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{check_dim, Dataset, RegressionError, Result};

/// Projection onto the top two principal components of the fit data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaTransform {
    pub mean: Vec<f64>,
    /// Two orthonormal rows of length D, largest variance first.
    pub components: [Vec<f64>; 2],
    /// Sample-covariance eigenvalues belonging to `components`.
    pub explained_variance: [f64; 2],
}

/// Fits a two-component PCA from the sample covariance (N − 1 denominator).
///
/// Each component's sign is fixed so its largest-magnitude entry is positive.
pub fn fit_pca2(data: &Dataset) -> Result<PcaTransform> {
    let n = data.n_samples();
    let d = data.n_features();
    if d < 2 {
        return Err(RegressionError::InvalidParameter(format!("PCA needs at least 2 features, got {d}")));
    }
    if n < 3 {
        return Err(RegressionError::TooFewSamples { needed: 3, got: n });
    }

    let mut mean = vec![0.0; d];
    for row in data.features() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut cov = DMatrix::<f64>::zeros(d, d);
    for row in data.features() {
        for i in 0..d {
            let di = row[i] - mean[i];
            for j in i..d {
                cov[(i, j)] += di * (row[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / (n as f64 - 1.0);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let component = |k: usize| {
        let col = order[k];
        let mut v: Vec<f64> = (0..d).map(|i| eig.eigenvectors[(i, col)]).collect();
        let lead = v.iter().copied().fold(0.0, |acc: f64, x| if x.abs() > acc.abs() { x } else { acc });
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v
    };
    Ok(PcaTransform {
        mean,
        components: [component(0), component(1)],
        explained_variance: [eig.eigenvalues[order[0]].max(0.0), eig.eigenvalues[order[1]].max(0.0)],
    })
}

impl PcaTransform {
    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<[f64; 2]> {
        check_dim(self.mean.len(), x.len())?;
        let project = |c: &[f64]| c.iter().zip(x.iter().zip(&self.mean)).map(|(c, (v, m))| c * (v - m)).sum();
        Ok([project(&self.components[0]), project(&self.components[1])])
    }

    /// Maps a 2-D projection back into the original feature space.
    pub fn reconstruct(&self, z: [f64; 2]) -> Vec<f64> {
        (0..self.mean.len())
            .map(|i| self.mean[i] + z[0] * self.components[0][i] + z[1] * self.components[1][i])
            .collect()
    }
}
