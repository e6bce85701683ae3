use serde::{Deserialize, Serialize};

use super::{check_dim, Dataset, Result};

/// Per-column min-max normalization. Constant columns map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        assert!(!rows.is_empty(), "cannot fit a scaler on zero rows");
        let width = rows[0].len();
        let mut min = vec![f64::INFINITY; width];
        let mut max = vec![f64::NEG_INFINITY; width];
        for row in rows {
            for j in 0..width {
                min[j] = min[j].min(row[j]);
                max[j] = max[j].max(row[j]);
            }
        }
        Self { min, max }
    }

    pub fn fit_dataset(data: &Dataset) -> Self {
        Self::fit(data.features())
    }

    pub fn n_features(&self) -> usize {
        self.min.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.min.len(), x.len())?;
        Ok(x.iter()
            .enumerate()
            .map(|(j, &v)| {
                let range = self.max[j] - self.min[j];
                if range > 0.0 {
                    (v - self.min[j]) / range
                } else {
                    0.0
                }
            })
            .collect())
    }

    pub fn invert(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.min.len(), x.len())?;
        Ok(x.iter().enumerate().map(|(j, &v)| v * (self.max[j] - self.min[j]) + self.min[j]).collect())
    }

    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        let rows = data.features().iter().map(|r| self.apply(r)).collect::<Result<Vec<_>>>()?;
        Dataset::new(rows, data.targets().to_vec())
    }
}
