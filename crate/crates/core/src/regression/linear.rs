use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{check_dim, Dataset, RegressionError, Regressor, Result};

/// Normal matrices (after column equilibration) above this condition number are rejected.
pub const MAX_CONDITION_NUMBER: f64 = 1e12;

/// `y = coefficients · x + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn new(coefficients: Vec<f64>, intercept: f64) -> Self {
        Self { coefficients, intercept }
    }
}

impl Regressor for LinearModel {
    fn n_features(&self) -> usize {
        self.coefficients.len()
    }

    fn predict(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.coefficients.len(), x.len())?;
        Ok(self.coefficients.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() + self.intercept)
    }
}

/// Ordinary least squares through the normal equations.
///
/// The design matrix is augmented with an intercept column and each column is
/// scaled to unit norm before forming `ZᵀZ`; the system is then solved by
/// Gaussian elimination with partial pivoting. Column indices reported in a
/// singularity error use the caller's feature order, with index `D` standing
/// for the intercept.
pub fn fit_linear(data: &Dataset) -> Result<LinearModel> {
    let n = data.n_samples();
    let d = data.n_features();
    let p = d + 1;
    if n < p {
        return Err(RegressionError::TooFewSamples { needed: p, got: n });
    }

    let column = |row: &[f64], j: usize| if j < d { row[j] } else { 1.0 };

    let mut scale = vec![0.0; p];
    for row in data.features() {
        for (j, s) in scale.iter_mut().enumerate() {
            *s += column(row, j).powi(2);
        }
    }
    let zero_cols: Vec<usize> = (0..p).filter(|&j| scale[j] == 0.0).collect();
    if !zero_cols.is_empty() {
        return Err(RegressionError::Singular { columns: zero_cols, condition: f64::INFINITY });
    }
    for s in scale.iter_mut() {
        *s = s.sqrt();
    }

    let mut normal = vec![vec![0.0; p]; p];
    let mut rhs = vec![0.0; p];
    for (row, &y) in data.features().iter().zip(data.targets()) {
        for j in 0..p {
            let zj = column(row, j) / scale[j];
            rhs[j] += zj * y;
            for k in j..p {
                normal[j][k] += zj * column(row, k) / scale[k];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            normal[j][k] = normal[k][j];
        }
    }

    let (condition, weak) = condition_number(&normal);
    if !(condition <= MAX_CONDITION_NUMBER) {
        return Err(RegressionError::Singular { columns: weak, condition });
    }

    let solution = solve_partial_pivot(normal, rhs)
        .ok_or_else(|| RegressionError::Singular { columns: (0..p).collect(), condition })?;
    let coefficients = (0..d).map(|j| solution[j] / scale[j]).collect();
    let intercept = solution[d] / scale[d];
    Ok(LinearModel { coefficients, intercept })
}

/// Condition number of a symmetric positive semi-definite matrix, plus the
/// columns that load on its weakest eigendirection.
fn condition_number(a: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let p = a.len();
    let m = DMatrix::from_fn(p, p, |i, j| a[i][j]);
    let eig = SymmetricEigen::new(m);
    let (mut lo, mut hi) = (0, 0);
    for i in 0..p {
        if eig.eigenvalues[i] < eig.eigenvalues[lo] {
            lo = i;
        }
        if eig.eigenvalues[i] > eig.eigenvalues[hi] {
            hi = i;
        }
    }
    let min = eig.eigenvalues[lo];
    let max = eig.eigenvalues[hi];
    let condition = if min <= 0.0 { f64::INFINITY } else { max / min };
    let weak = (0..p).filter(|&j| eig.eigenvectors[(j, lo)].abs() > 0.1).collect();
    (condition, weak)
}

fn solve_partial_pivot(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col] == 0.0 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_line_through_points() {
        let data = Dataset::univariate(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        let m = fit_linear(&data).unwrap();
        assert_abs_diff_eq!(m.coefficients[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.intercept, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exact_plane() {
        let data = Dataset::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![0.0, 0.0]],
            vec![2.0, 3.0, 5.0, 0.0],
        )
        .unwrap();
        let m = fit_linear(&data).unwrap();
        assert_abs_diff_eq!(m.coefficients[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.coefficients[1], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.intercept, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn predictions() {
        let m = LinearModel::new(vec![2.0], 1.0);
        assert_eq!(m.predict(&[3.0]).unwrap(), 7.0);
        let c = LinearModel::new(vec![0.0, 0.0], 0.5);
        assert_eq!(c.predict(&[123.0, -4.0]).unwrap(), 0.5);
        assert!(matches!(c.predict(&[1.0]), Err(RegressionError::DimensionMismatch { expected: 2, got: 1 })));
    }

    #[test]
    fn duplicated_column_is_singular_and_named() {
        let data = Dataset::new(
            vec![vec![1.0, 2.0, 1.0], vec![2.0, 4.0, 0.0], vec![3.0, 6.0, 5.0], vec![4.0, 8.0, 2.0]],
            vec![1.0, 2.0, 3.0, 4.0],
        )
        .unwrap();
        match fit_linear(&data) {
            Err(RegressionError::Singular { columns, .. }) => {
                assert!(columns.contains(&0) && columns.contains(&1), "{columns:?}");
                assert!(!columns.contains(&2), "{columns:?}");
            }
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn constant_column_collides_with_intercept() {
        let data = Dataset::new(vec![vec![3.0, 1.0], vec![3.0, 2.0], vec![3.0, 4.0]], vec![1.0, 2.0, 3.0]).unwrap();
        match fit_linear(&data) {
            Err(RegressionError::Singular { columns, .. }) => assert!(columns.contains(&0) && columns.contains(&2)),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn too_few_samples() {
        let data = Dataset::new(vec![vec![1.0, 2.0], vec![2.0, 1.0]], vec![1.0, 2.0]).unwrap();
        assert!(matches!(fit_linear(&data), Err(RegressionError::TooFewSamples { needed: 3, got: 2 })));
    }
}
