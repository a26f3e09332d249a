//! Exact GP regression under Gaussian noise: marginal likelihood, its
//! log-space gradient and the fixed-hyperparameter posterior predictive.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec;
use crate::kernel::{cross_gram, gram_matrix, row_major, SmHyperParams};
use crate::stats::{LN_2PI, TWO_PI, TWO_PI_SQ};

const JITTER_START: f64 = 1e-8;
const JITTER_MAX: f64 = 1e-4;

/// Cholesky factor of `K + (noise + jitter) I` and the weight vector
/// `alpha = (K + noise I)^-1 y`.
pub struct Conditioned<'a> {
    data: &'a Dataset,
    params: &'a SmHyperParams,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    /// Jitter as a fraction of the mean diagonal.
    relative_jitter: f64,
}

/// Factorises the noisy Gram matrix, adding `1e-8 * mean(diag)` and doubling
/// it up to `1e-4 * mean(diag)` until Cholesky succeeds.
pub fn condition<'a>(data: &'a Dataset, params: &'a SmHyperParams) -> Result<Conditioned<'a>> {
    if data.dims() != params.dims() {
        return Err(Error::Shape(format!(
            "data has D={} but kernel has D={}",
            data.dims(),
            params.dims()
        )));
    }
    let n = data.len();
    let mut k = gram_matrix(&data.inputs, params);
    let mean_diag = params.signal_variance() + params.noise_variance;
    if !mean_diag.is_finite() || k.iter().any(|v| !v.is_finite()) {
        return Err(Error::FactorizationFailure { jitter: 0.0 });
    }
    for i in 0..n {
        k[(i, i)] += params.noise_variance;
    }
    let mut rel = JITTER_START;
    let mut added = 0.0;
    loop {
        let target = rel * mean_diag;
        for i in 0..n {
            k[(i, i)] += target - added;
        }
        added = target;
        if let Some(chol) = k.clone().cholesky() {
            let alpha = chol.solve(&data.targets);
            if alpha.iter().all(|a| a.is_finite()) {
                return Ok(Conditioned {
                    data,
                    params,
                    chol,
                    alpha,
                    relative_jitter: rel,
                });
            }
        }
        rel *= 2.0;
        if rel > JITTER_MAX {
            return Err(Error::FactorizationFailure { jitter: rel / 2.0 });
        }
    }
}

impl Conditioned<'_> {
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.data.len() as f64;
        let l = self.chol.l_dirty();
        let log_det_half: f64 = (0..self.data.len()).map(|i| l[(i, i)].ln()).sum();
        -0.5 * self.data.targets.dot(&self.alpha) - log_det_half - 0.5 * n * LN_2PI
    }

    /// Gradient with respect to [`SmHyperParams::to_log_vec`] coordinates.
    pub fn gradient(&self) -> Vec<f64> {
        let p = self.params;
        let (q, d) = (p.q(), p.dims());
        let n = self.data.len();
        let stride = 1 + 2 * d;
        let np = p.n_params();

        // A = alpha alpha^T - K^-1; dL/dtheta = 1/2 tr(A dK/dtheta)
        let mut a = self.chol.inverse();
        a.neg_mut();
        a.ger(1.0, &self.alpha, &self.alpha, 1.0);
        let trace_a: f64 = (0..n).map(|i| a[(i, i)]).sum();

        let rows = row_major(&self.data.inputs);
        let per_row = exec::for_work(n * n * q / 2).map_range(n, |i| {
            let mut g = vec![0.0; np];
            let xi = &rows[i * d..(i + 1) * d];
            let mut tau = vec![0.0; d];
            let arow = a.row(i);
            for j in i + 1..n {
                let xj = &rows[j * d..(j + 1) * d];
                for ((t, a), b) in tau.iter_mut().zip(xi).zip(xj) {
                    *t = a - b;
                }
                let aij = 2.0 * arow[j];
                for (ci, c) in p.components.iter().enumerate() {
                    let phase: f64 = tau.iter().zip(&c.mean_freq).map(|(t, m)| t * m).sum();
                    let decay: f64 = tau.iter().zip(&c.bandwidth).map(|(t, s)| t * t * s * s).sum();
                    let env = c.weight * (-TWO_PI_SQ * decay).exp();
                    let (sin, cos) = (TWO_PI * phase).sin_cos();
                    let kval = env * cos;
                    let base = ci * stride;
                    g[base] += aij * kval;
                    for k in 0..d {
                        g[base + 1 + k] -= aij * env * sin * TWO_PI * tau[k] * c.mean_freq[k];
                        let ts = tau[k] * c.bandwidth[k];
                        g[base + 1 + d + k] -= aij * 2.0 * TWO_PI_SQ * ts * ts * kval;
                    }
                }
            }
            g
        });
        let mut grad = vec![0.0; np];
        for g in per_row {
            for (acc, v) in grad.iter_mut().zip(g) {
                *acc += v;
            }
        }
        // Diagonal: k(0) = sum w, so only the weights contribute; the jitter
        // term scales with the mean diagonal.
        let jit = self.relative_jitter;
        for (ci, c) in p.components.iter().enumerate() {
            grad[ci * stride] += trace_a * c.weight * (1.0 + jit);
        }
        grad[q * stride] += trace_a * p.noise_variance * (1.0 + jit);
        grad.iter_mut().for_each(|g| *g *= 0.5);
        grad
    }

    /// Predictive mean and variance of noisy targets at `xstar`.
    pub fn predict(&self, xstar: &DMatrix<f64>) -> GaussianPredictive {
        let ks = cross_gram(&self.data.inputs, xstar, self.params);
        let mean = ks.transpose() * &self.alpha;
        let v = self
            .chol
            .l_dirty()
            .lower_triangle()
            .solve_lower_triangular(&ks)
            .expect("cholesky factor has a positive diagonal");
        let k0 = self.params.signal_variance();
        let noise = self.params.noise_variance;
        let variance = v
            .column_iter()
            .map(|col| (k0 - col.norm_squared()).max(0.0) + noise)
            .collect();
        GaussianPredictive {
            mean: mean.iter().copied().collect(),
            variance,
        }
    }
}

/// Per-point Gaussian predictive (diagonal only).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPredictive {
    pub mean: Vec<f64>,
    /// Includes the observation noise.
    pub variance: Vec<f64>,
}

/// `log N(y | 0, K + noise I)`.
pub fn log_marginal_likelihood(data: &Dataset, params: &SmHyperParams) -> Result<f64> {
    Ok(condition(data, params)?.log_marginal_likelihood())
}

/// Gradient of the log marginal likelihood in log-hyperparameter space,
/// laid out as [`SmHyperParams::to_log_vec`].
pub fn lml_gradient(data: &Dataset, params: &SmHyperParams) -> Result<Vec<f64>> {
    Ok(condition(data, params)?.gradient())
}

/// Value and gradient sharing one factorisation.
pub fn lml_and_gradient(data: &Dataset, params: &SmHyperParams) -> Result<(f64, Vec<f64>)> {
    let c = condition(data, params)?;
    Ok((c.log_marginal_likelihood(), c.gradient()))
}

pub fn posterior_predictive(
    data: &Dataset,
    params: &SmHyperParams,
    xstar: &DMatrix<f64>,
) -> Result<GaussianPredictive> {
    if xstar.ncols() != data.dims() {
        return Err(Error::Shape("test inputs have the wrong dimension".into()));
    }
    Ok(condition(data, params)?.predict(xstar))
}
