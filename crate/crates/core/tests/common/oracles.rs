//! Reference solvers used only by tests. Each one follows a different
//! numerical route from the library code it checks.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use transim::regression::{Regressor, SvrModel};

/// OLS coefficients (intercept last) from the raw normal equations solved by
/// Gauss-Jordan elimination with full pivoting.
pub fn ols_gauss_jordan(features: &[Vec<f64>], targets: &[f64]) -> Vec<f64> {
    let d = features[0].len();
    let p = d + 1;
    let aug = |row: &[f64], j: usize| if j < d { row[j] } else { 1.0 };
    let mut m = vec![vec![0.0; p + 1]; p];
    for (row, &y) in features.iter().zip(targets) {
        for j in 0..p {
            for k in 0..p {
                m[j][k] += aug(row, j) * aug(row, k);
            }
            m[j][p] += aug(row, j) * y;
        }
    }
    let mut perm: Vec<usize> = (0..p).collect();
    for col in 0..p {
        let (mut br, mut bc) = (col, col);
        for r in col..p {
            for c in col..p {
                if m[r][c].abs() > m[br][bc].abs() {
                    br = r;
                    bc = c;
                }
            }
        }
        m.swap(col, br);
        for row in m.iter_mut() {
            row.swap(col, bc);
        }
        perm.swap(col, bc);
        let piv = m[col][col];
        for v in m[col].iter_mut() {
            *v /= piv;
        }
        for r in 0..p {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..=p {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    let mut out = vec![0.0; p];
    for (i, &var) in perm.iter().enumerate() {
        out[var] = m[i][p];
    }
    out
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns (eigenvalues, eigenvectors as columns), sorted by descending eigenvalue.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order.iter().map(|&col| (0..n).map(|r| v[r][col]).collect()).collect();
    (values, vectors)
}

/// Sample covariance (N − 1 denominator).
pub fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len() as f64;
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let mut c = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                c[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    c.iter_mut().flatten().for_each(|v| *v /= n - 1.0);
    c
}

pub enum OracleKernel {
    Poly2,
    Rbf(f64),
}

impl OracleKernel {
    pub fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        match self {
            OracleKernel::Poly2 => u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>().powi(2),
            OracleKernel::Rbf(s) => (-u.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (2.0 * s * s)).exp(),
        }
    }
}

pub struct QpSolution {
    /// αᵢ − αᵢ* per training point.
    pub coefficients: Vec<f64>,
    pub bias: f64,
}

impl QpSolution {
    pub fn predict(&self, kernel: &OracleKernel, train: &[Vec<f64>], x: &[f64]) -> f64 {
        train.iter().zip(&self.coefficients).map(|(s, c)| c * kernel.eval(s, x)).sum::<f64>() + self.bias
    }
}

/// Euclidean projection of `z` onto {0 ≤ β ≤ c, Σ sᵢ βᵢ = 0}, by bisection on
/// the multiplier of the equality constraint followed by a secant refinement.
fn project(z: &[f64], signs: &[f64], c: f64) -> Vec<f64> {
    let at = |lam: f64| -> (Vec<f64>, f64) {
        let b: Vec<f64> = z.iter().zip(signs).map(|(zi, si)| (zi - lam * si).clamp(0.0, c)).collect();
        let h = b.iter().zip(signs).map(|(bi, si)| bi * si).sum();
        (b, h)
    };
    let span = z.iter().fold(0.0f64, |m, v| m.max(v.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid).1 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    at(0.5 * (lo + hi)).0
}

/// Dense epsilon-SVR dual solved by accelerated projected gradient (FISTA with
/// adaptive restart). The offset is then chosen by minimizing the primal slack
/// Σ max(0, |tᵢ − gᵢ − b| − ε) exactly over its breakpoints.
pub fn svr_dual_projected_gradient(
    features: &[Vec<f64>],
    targets: &[f64],
    kernel: &OracleKernel,
    c: f64,
    eps: f64,
    iterations: usize,
) -> QpSolution {
    let n = targets.len();
    let l = 2 * n;
    let k: Vec<Vec<f64>> = features.iter().map(|u| features.iter().map(|v| kernel.eval(u, v)).collect()).collect();
    let signs: Vec<f64> = (0..l).map(|t| if t < n { 1.0 } else { -1.0 }).collect();
    let q: Vec<Vec<f64>> = (0..l).map(|s| (0..l).map(|t| signs[s] * signs[t] * k[s % n][t % n]).collect()).collect();
    let lin: Vec<f64> = (0..l).map(|t| if t < n { eps - targets[t] } else { eps + targets[t - n] }).collect();
    let (vals, _) = jacobi_eigen(&q);
    let step = 1.0 / vals[0].max(1e-12);

    let grad =
        |b: &[f64]| -> Vec<f64> { (0..l).map(|s| lin[s] + (0..l).map(|t| q[s][t] * b[t]).sum::<f64>()).collect() };
    let mut x = vec![0.0; l];
    let mut y = x.clone();
    let mut t_k = 1.0f64;
    for _ in 0..iterations {
        let g = grad(&y);
        let z: Vec<f64> = y.iter().zip(&g).map(|(yi, gi)| yi - step * gi).collect();
        let x_next = project(&z, &signs, c);
        let restart = g.iter().zip(x_next.iter().zip(&x)).map(|(gi, (a, b))| gi * (a - b)).sum::<f64>() > 0.0;
        let t_next = if restart { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * t_k * t_k).sqrt()) };
        let momentum = if restart { 0.0 } else { (t_k - 1.0) / t_next };
        let moved: f64 = x_next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        y = x_next.iter().zip(&x).map(|(a, b)| a + momentum * (a - b)).collect();
        x = x_next;
        t_k = t_next;
        if moved < 1e-15 && !restart {
            break;
        }
    }

    let coefficients: Vec<f64> = (0..n).map(|i| x[i] - x[i + n]).collect();
    let residual: Vec<f64> =
        (0..n).map(|i| targets[i] - (0..n).map(|j| coefficients[j] * k[i][j]).sum::<f64>()).collect();
    let slack = |b: f64| residual.iter().map(|r| ((r - b).abs() - eps).max(0.0)).sum::<f64>();
    let mut points: Vec<f64> = residual.iter().flat_map(|r| [r - eps, r + eps]).collect();
    points.sort_by(f64::total_cmp);
    let best = points.iter().map(|&b| slack(b)).fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * (1.0 + best);
    let minimizers: Vec<f64> = points.iter().copied().filter(|&b| slack(b) <= best + tol).collect();
    let bias = 0.5 * (minimizers[0] + minimizers[minimizers.len() - 1]);
    QpSolution { coefficients, bias }
}

/// Largest KKT violation of a fitted SVR at its training points, plus the
/// equality-constraint residual Σ(α − α*).
pub fn kkt_residual(model: &SvrModel, rows: &[Vec<f64>], targets: &[f64], c: f64, eps: f64) -> f64 {
    let mut worst = model.dual_coefficients.iter().sum::<f64>().abs();
    for (x, &t) in rows.iter().zip(targets) {
        let coef = model.support_inputs.iter().position(|s| s == x).map_or(0.0, |i| model.dual_coefficients[i]);
        let r = t - model.predict(x).unwrap();
        let free = 1e-9 * c;
        let v = if coef.abs() <= free {
            (r.abs() - eps).max(0.0)
        } else if coef >= c - free {
            (eps - r).max(0.0)
        } else if coef <= -c + free {
            (r + eps).max(0.0)
        } else if coef > 0.0 {
            (r - eps).abs()
        } else {
            (r + eps).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Rows whose covariance has the given variances along a random rotation.
pub fn structured_rows(rng: &mut ChaCha8Rng, n: usize, variances: &[f64]) -> Vec<Vec<f64>> {
    let d = variances.len();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while basis.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    (0..n)
        .map(|_| {
            let z: Vec<f64> = variances.iter().map(|s| s.sqrt() * rng.gen_range(-1.7..1.7)).collect();
            (0..d).map(|j| basis.iter().zip(&z).map(|(b, zi)| b[j] * zi).sum::<f64>() + 2.0).collect()
        })
        .collect()
}

/// Largest principal angle between two 2-D subspaces given by orthonormal bases.
pub fn span_angle(a: &[Vec<f64>; 2], b: &[Vec<f64>]) -> f64 {
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
    let m = [[dot(&a[0], &b[0]), dot(&a[0], &b[1])], [dot(&a[1], &b[0]), dot(&a[1], &b[1])]];
    // Singular values of the 2x2 overlap matrix are the principal-angle cosines.
    let g00 = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    let g11 = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    let g01 = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    let half_tr = 0.5 * (g00 + g11);
    let det = g00 * g11 - g01 * g01;
    let smallest = half_tr - (half_tr * half_tr - det).max(0.0).sqrt();
    smallest.max(0.0).sqrt().min(1.0).acos()
}
