use serde::{Deserialize, Serialize};

use super::{RegressionError, Result};

/// Kernel functions available to the SVR solver.
///
/// The polynomial kernel is the bare square of the inner product, `(u·v)²`,
/// with no additive constant. The RBF kernel is `exp(-‖u − v‖² / 2σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelSpec {
    #[serde(rename = "polynomial-degree-2")]
    Polynomial2,
    Rbf {
        sigma: f64,
    },
}

impl KernelSpec {
    pub fn rbf(sigma: f64) -> Result<Self> {
        if sigma > 0.0 && sigma.is_finite() {
            Ok(KernelSpec::Rbf { sigma })
        } else {
            Err(RegressionError::InvalidParameter(format!("RBF sigma must be positive, got {sigma}")))
        }
    }

    /// RBF kernel whose width is the median pairwise Euclidean distance of `rows`.
    /// Falls back to σ = 1 when every pair coincides.
    pub fn rbf_median_heuristic(rows: &[Vec<f64>]) -> Self {
        KernelSpec::Rbf { sigma: median_pairwise_distance(rows).unwrap_or(1.0) }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Polynomial2 => Ok(()),
            KernelSpec::Rbf { sigma } => Self::rbf(sigma).map(|_| ()),
        }
    }

    pub fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        match *self {
            KernelSpec::Polynomial2 => {
                let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
                dot * dot
            }
            KernelSpec::Rbf { sigma } => {
                let sq: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                (-sq / (2.0 * sigma * sigma)).exp()
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Polynomial2 => "polynomial-degree-2",
            KernelSpec::Rbf { .. } => "rbf",
        }
    }
}

fn median_pairwise_distance(rows: &[Vec<f64>]) -> Option<f64> {
    let mut dists = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let sq: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            dists.push(sq.sqrt());
        }
    }
    if dists.is_empty() {
        return None;
    }
    dists.sort_by(f64::total_cmp);
    let m = dists.len();
    let median = if m % 2 == 1 { dists[m / 2] } else { 0.5 * (dists[m / 2 - 1] + dists[m / 2]) };
    (median > 0.0).then_some(median)
}
