//! Spectral mixture kernel: covariance, spectral density and Gram matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exec;
use crate::stats::{TWO_PI, TWO_PI_SQ};

/// One Gaussian pair in the spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralComponent {
    /// Variance contributed by this component.
    pub weight: f64,
    /// Mean frequency per input dimension, in cycles per input unit.
    pub mean_freq: Vec<f64>,
    /// Spectral standard deviation per input dimension.
    pub bandwidth: Vec<f64>,
}

impl SpectralComponent {
    pub fn new(weight: f64, mean_freq: Vec<f64>, bandwidth: Vec<f64>) -> Self {
        Self {
            weight,
            mean_freq,
            bandwidth,
        }
    }

    /// Single-dimension convenience constructor.
    pub fn scalar(weight: f64, mean_freq: f64, bandwidth: f64) -> Self {
        Self::new(weight, vec![mean_freq], vec![bandwidth])
    }

    pub fn dims(&self) -> usize {
        self.mean_freq.len()
    }

    #[inline]
    fn eval(&self, tau: &[f64]) -> f64 {
        let mut phase = 0.0;
        let mut decay = 0.0;
        for ((t, m), s) in tau.iter().zip(&self.mean_freq).zip(&self.bandwidth) {
            phase += t * m;
            decay += t * t * s * s;
        }
        self.weight * (TWO_PI * phase).cos() * (-TWO_PI_SQ * decay).exp()
    }
}

/// Kernel plus noise hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SmHyperParams {
    pub components: Vec<SpectralComponent>,
    /// Observation noise variance.
    pub noise_variance: f64,
}

impl SmHyperParams {
    pub fn new(components: Vec<SpectralComponent>, noise_variance: f64) -> Result<Self> {
        let p = Self {
            components,
            noise_variance,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.components.first() else {
            return Err(Error::Domain("at least one spectral component required".into()));
        };
        let d = first.dims();
        if d == 0 {
            return Err(Error::Domain("components need at least one dimension".into()));
        }
        if !(self.noise_variance > 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::Domain(format!(
                "noise variance must be positive, got {}",
                self.noise_variance
            )));
        }
        for (i, c) in self.components.iter().enumerate() {
            if c.mean_freq.len() != d || c.bandwidth.len() != d {
                return Err(Error::Shape(format!("component {i} has inconsistent dimensions")));
            }
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return Err(Error::Domain(format!(
                    "component {i}: weight {} not positive",
                    c.weight
                )));
            }
            if c.bandwidth.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                return Err(Error::Domain(format!("component {i}: bandwidth not positive")));
            }
            if c.mean_freq.iter().any(|m| !(*m >= 0.0 && m.is_finite())) {
                return Err(Error::Domain(format!("component {i}: negative frequency")));
            }
        }
        Ok(())
    }

    pub fn q(&self) -> usize {
        self.components.len()
    }

    pub fn dims(&self) -> usize {
        self.components[0].dims()
    }

    /// `k(0)`, the prior variance of the latent function.
    pub fn signal_variance(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    /// Length of the flattened hyperparameter vector, `Q(1 + 2D) + 1`.
    pub fn n_params(&self) -> usize {
        param_count(self.q(), self.dims())
    }

    /// Log-space vector in the canonical layout: per component
    /// `[log w, log mu_1..D, log sigma_1..D]`, then `log noise_variance`.
    pub fn to_log_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_params());
        for c in &self.components {
            v.push(c.weight.ln());
            v.extend(c.mean_freq.iter().map(|m| m.ln()));
            v.extend(c.bandwidth.iter().map(|s| s.ln()));
        }
        v.push(self.noise_variance.ln());
        v
    }

    /// Inverse of [`to_log_vec`](Self::to_log_vec). Does not validate.
    pub fn from_log_vec(z: &[f64], q: usize, d: usize) -> Self {
        assert_eq!(z.len(), param_count(q, d), "log vector length");
        let stride = 1 + 2 * d;
        let components = (0..q)
            .map(|i| {
                let b = &z[i * stride..(i + 1) * stride];
                SpectralComponent {
                    weight: b[0].exp(),
                    mean_freq: b[1..=d].iter().map(|x| x.exp()).collect(),
                    bandwidth: b[1 + d..].iter().map(|x| x.exp()).collect(),
                }
            })
            .collect();
        Self {
            components,
            noise_variance: z[q * stride].exp(),
        }
    }

    /// Evaluates the kernel at an input difference.
    pub fn kernel(&self, tau: &[f64]) -> f64 {
        sm_kernel(tau, self)
    }
}

pub fn param_count(q: usize, d: usize) -> usize {
    q * (1 + 2 * d) + 1
}

/// `k(tau) = sum_i w_i cos(2 pi tau.mu_i) prod_d exp(-2 pi^2 tau_d^2 sigma_id^2)`.
pub fn sm_kernel(tau: &[f64], params: &SmHyperParams) -> f64 {
    params.components.iter().map(|c| c.eval(tau)).sum()
}

/// One-dimensional spectral density
/// `S(nu) = sum_i w_i / 2 [G(nu; mu_i, sigma_i) + G(nu; -mu_i, sigma_i)]`.
pub fn spectral_density(nu: f64, params: &SmHyperParams) -> Result<f64> {
    if params.dims() != 1 {
        return Err(Error::Shape(format!(
            "spectral density is only defined for 1-D kernels, got D={}",
            params.dims()
        )));
    }
    let gauss = |x: f64, m: f64, s: f64| {
        let z = (x - m) / s;
        (-0.5 * z * z).exp() / (s * (TWO_PI).sqrt())
    };
    Ok(params
        .components
        .iter()
        .map(|c| {
            let (m, s) = (c.mean_freq[0], c.bandwidth[0]);
            0.5 * c.weight * (gauss(nu, m, s) + gauss(nu, -m, s))
        })
        .sum())
}

/// Symmetric Gram matrix `K_ij = k(x_i - x_j)` over the rows of `x`.
pub fn gram_matrix(x: &DMatrix<f64>, params: &SmHyperParams) -> DMatrix<f64> {
    let n = x.nrows();
    gram_matrix_with(x, params, exec::for_work(n * n * params.q()))
}

/// [`gram_matrix`] with explicit scheduling of the row loop.
pub fn gram_matrix_with(x: &DMatrix<f64>, params: &SmHyperParams, execution: exec::Execution) -> DMatrix<f64> {
    let n = x.nrows();
    let d = x.ncols();
    let rows = row_major(x);
    let k0 = params.signal_variance();
    // Row-major upper triangle, mirrored afterwards.
    let mut buf = vec![0.0; n * n];
    execution.for_each_chunk_mut(&mut buf, n, |i, row| {
        let xi = &rows[i * d..(i + 1) * d];
        let mut tau = vec![0.0; d];
        row[i] = k0;
        for j in i + 1..n {
            let xj = &rows[j * d..(j + 1) * d];
            for k in 0..d {
                tau[k] = xi[k] - xj[k];
            }
            row[j] = sm_kernel(&tau, params);
        }
    });
    for i in 0..n {
        for j in 0..i {
            buf[i * n + j] = buf[j * n + i];
        }
    }
    DMatrix::from_row_slice(n, n, &buf)
}

/// Cross-covariance `K_ij = k(a_i - b_j)`, shape `a.nrows() x b.nrows()`.
pub fn cross_gram(a: &DMatrix<f64>, b: &DMatrix<f64>, params: &SmHyperParams) -> DMatrix<f64> {
    let (n, m, d) = (a.nrows(), b.nrows(), a.ncols());
    assert_eq!(d, b.ncols(), "input dimension mismatch");
    let ra = row_major(a);
    let rb = row_major(b);
    let mut buf = vec![0.0; n * m];
    exec::for_work(n * m * params.q()).for_each_chunk_mut(&mut buf, m.max(1), |i, row| {
        if m == 0 {
            return;
        }
        let xi = &ra[i * d..(i + 1) * d];
        let mut tau = vec![0.0; d];
        for (j, slot) in row.iter_mut().enumerate() {
            let xj = &rb[j * d..(j + 1) * d];
            for k in 0..d {
                tau[k] = xi[k] - xj[k];
            }
            *slot = sm_kernel(&tau, params);
        }
    });
    DMatrix::from_row_slice(n, m, &buf)
}

pub(crate) fn row_major(x: &DMatrix<f64>) -> Vec<f64> {
    x.transpose().as_slice().to_vec()
}
