use serde::{Deserialize, Serialize};

use super::{check_dim, Dataset, KernelSpec, RegressionError, Regressor, Result};

/// Box constraint `penalty` (C) and tube half-width `epsilon_tube` (ε).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrHyperParams {
    pub penalty: f64,
    pub epsilon_tube: f64,
}

impl SvrHyperParams {
    pub fn new(penalty: f64, epsilon_tube: f64) -> Result<Self> {
        let hp = Self { penalty, epsilon_tube };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.penalty > 0.0 && self.penalty.is_finite()) {
            return Err(RegressionError::InvalidParameter(format!("penalty must be positive, got {}", self.penalty)));
        }
        if !(self.epsilon_tube > 0.0 && self.epsilon_tube.is_finite()) {
            return Err(RegressionError::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon_tube
            )));
        }
        Ok(())
    }
}

/// Solver controls for [`fit_svr_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvrOptions {
    /// Stop once the maximal KKT violation `m(α) − M(α)` drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SvrOptions {
    fn default() -> Self {
        Self { tolerance: 1e-5, max_iterations: 1_000_000 }
    }
}

/// Kernel expansion `f(x) = Σ (αᵢ − αᵢ*) K(sᵢ, x) + bias` over the support set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub support_inputs: Vec<Vec<f64>>,
    pub dual_coefficients: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelSpec,
    pub n_features: usize,
}

impl Regressor for SvrModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.n_features, x.len())?;
        let sum: f64 =
            self.support_inputs.iter().zip(&self.dual_coefficients).map(|(s, c)| c * self.kernel.eval(s, x)).sum();
        Ok(sum + self.bias)
    }
}

pub fn fit_svr(data: &Dataset, kernel: KernelSpec, hp: SvrHyperParams) -> Result<SvrModel> {
    fit_svr_with(data, kernel, hp, SvrOptions::default())
}

/// Solves the epsilon-SVR dual with sequential minimal optimization.
///
/// The dual is written over `2N` variables β = (α, α*) with signs `y = (+1…, −1…)`:
/// minimize `½ βᵀQβ + pᵀβ` subject to `yᵀβ = 0` and `0 ≤ β ≤ C`, where
/// `Q_st = y_s y_t K(x_s, x_t)`, `p = (ε − t, ε + t)`. Each iteration picks the
/// maximal violating pair and solves the two-variable subproblem in closed form.
pub fn fit_svr_with(data: &Dataset, kernel: KernelSpec, hp: SvrHyperParams, opts: SvrOptions) -> Result<SvrModel> {
    kernel.validate()?;
    hp.validate()?;
    let n = data.n_samples();
    if n < 2 {
        return Err(RegressionError::TooFewSamples { needed: 2, got: n });
    }

    let gram: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| kernel.eval(data.row(i), data.row(j))).collect()).collect();
    let targets = data.targets();
    let c = hp.penalty;
    let l = 2 * n;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let q = |s: usize, t: usize| sign(s) * sign(t) * gram[s % n][t % n];

    let mut beta = vec![0.0; l];
    let mut grad: Vec<f64> =
        (0..l).map(|t| if t < n { hp.epsilon_tube - targets[t] } else { hp.epsilon_tube + targets[t - n] }).collect();

    let in_up = |t: usize, b: f64| if t < n { b < c } else { b > 0.0 };
    let in_low = |t: usize, b: f64| if t < n { b > 0.0 } else { b < c };

    let mut iterations = 0;
    loop {
        let mut up = None;
        let mut up_val = f64::NEG_INFINITY;
        let mut low = None;
        let mut low_val = f64::INFINITY;
        for t in 0..l {
            let v = -sign(t) * grad[t];
            if in_up(t, beta[t]) && v > up_val {
                up_val = v;
                up = Some(t);
            }
            if in_low(t, beta[t]) && v < low_val {
                low_val = v;
                low = Some(t);
            }
        }
        let violation = up_val - low_val;
        let (i, j) = match (up, low) {
            (Some(i), Some(j)) if violation >= opts.tolerance => (i, j),
            _ => break,
        };
        if iterations >= opts.max_iterations {
            return Err(RegressionError::Convergence { iterations, max_violation: violation });
        }
        iterations += 1;

        let (old_i, old_j) = (beta[i], beta[j]);
        let (qii, qjj, qij) = (q(i, i), q(j, j), q(i, j));
        const TAU: f64 = 1e-12;
        if sign(i) != sign(j) {
            let quad = (qii + qjj + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = beta[i] - beta[j];
            beta[i] += delta;
            beta[j] += delta;
            if diff > 0.0 {
                if beta[j] < 0.0 {
                    beta[j] = 0.0;
                    beta[i] = diff;
                }
            } else if beta[i] < 0.0 {
                beta[i] = 0.0;
                beta[j] = -diff;
            }
            if diff > 0.0 {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = c - diff;
                }
            } else if beta[j] > c {
                beta[j] = c;
                beta[i] = c + diff;
            }
        } else {
            let quad = (qii + qjj - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = beta[i] + beta[j];
            beta[i] -= delta;
            beta[j] += delta;
            if sum > c {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = sum - c;
                }
            } else if beta[j] < 0.0 {
                beta[j] = 0.0;
                beta[i] = sum;
            }
            if sum > c {
                if beta[j] > c {
                    beta[j] = c;
                    beta[i] = sum - c;
                }
            } else if beta[i] < 0.0 {
                beta[i] = 0.0;
                beta[j] = sum;
            }
        }

        let (di, dj) = (beta[i] - old_i, beta[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
    }

    let bias = -rho(&beta, &grad, c, n);
    let mut support_inputs = Vec::new();
    let mut dual_coefficients = Vec::new();
    for k in 0..n {
        let coef = beta[k] - beta[k + n];
        if coef != 0.0 {
            support_inputs.push(data.row(k).to_vec());
            dual_coefficients.push(coef);
        }
    }
    Ok(SvrModel { support_inputs, dual_coefficients, bias, kernel, n_features: data.n_features() })
}

/// Offset from the KKT conditions: mean over free variables, otherwise the
/// midpoint of the feasible interval implied by the bound variables.
fn rho(beta: &[f64], grad: &[f64], c: f64, n: usize) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for t in 0..beta.len() {
        let y = if t < n { 1.0 } else { -1.0 };
        let yg = y * grad[t];
        if beta[t] >= c {
            if y < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if beta[t] <= 0.0 {
            if y > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    if free > 0 {
        free_sum / free as f64
    } else {
        0.5 * (ub + lb)
    }
}
