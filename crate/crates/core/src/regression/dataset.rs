use super::{RegressionError, Result};

/// Feature matrix with one target per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if features.is_empty() {
            return Err(RegressionError::InvalidDataset("no rows".into()));
        }
        if features.len() != targets.len() {
            return Err(RegressionError::InvalidDataset(format!(
                "{} feature rows but {} targets",
                features.len(),
                targets.len()
            )));
        }
        let width = features[0].len();
        if width == 0 {
            return Err(RegressionError::InvalidDataset("zero feature columns".into()));
        }
        for (i, row) in features.iter().enumerate() {
            if row.len() != width {
                return Err(RegressionError::InvalidDataset(format!(
                    "row {i} has {} columns, expected {width}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(RegressionError::InvalidDataset(format!("row {i} has a non-finite feature")));
            }
        }
        if let Some(i) = targets.iter().position(|t| !t.is_finite()) {
            return Err(RegressionError::InvalidDataset(format!("target {i} is not finite")));
        }
        Ok(Self { features, targets })
    }

    /// Single-feature convenience constructor.
    pub fn univariate(xs: &[f64], ys: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| vec![x]).collect(), ys.to_vec())
    }

    pub fn n_samples(&self) -> usize {
        self.targets.len()
    }

    pub fn n_features(&self) -> usize {
        self.features[0].len()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i]
    }

    /// Rows selected by index, in the given order. Panics on out-of-range or empty selections.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        assert!(!indices.is_empty(), "empty subset");
        Dataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
        }
    }

    /// Same targets, features replaced row by row.
    pub fn map_features<F>(&self, f: F) -> Result<Dataset>
    where
        F: FnMut(&Vec<f64>) -> Vec<f64>,
    {
        Dataset::new(self.features.iter().map(f).collect(), self.targets.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_rows() {
        let err = Dataset::new(vec![vec![1.0, 2.0], vec![1.0]], vec![0.0, 1.0]).unwrap_err();
        assert!(matches!(err, RegressionError::InvalidDataset(_)));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Dataset::new(vec![vec![f64::NAN]], vec![0.0]).is_err());
        assert!(Dataset::new(vec![vec![1.0]], vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn rejects_empty_and_length_mismatch() {
        assert!(Dataset::new(vec![], vec![]).is_err());
        assert!(Dataset::new(vec![vec![1.0]], vec![1.0, 2.0]).is_err());
    }
}
