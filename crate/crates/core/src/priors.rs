//! Hyperpriors for the spectral mixture kernel.
//!
//! Weights, bandwidths and the noise variance are log-normal. Mean
//! frequencies follow either a two-branch prior (log-normal below the
//! fundamental frequency, uniform up to the Nyquist frequency, half the
//! mass on each side) or a plain log-normal in units of the fundamental.
//!
//! The unit-cube layout mirrors [`SmHyperParams::to_log_vec`]: per component
//! `[w, mu_1..D, sigma_1..D]`, then the noise variance.

use crate::dataset::FrequencyBounds;
use crate::error::{Error, Result};
use crate::kernel::{param_count, SmHyperParams, SpectralComponent};
use crate::stats::{norm_cdf, norm_quantile, normal_log_pdf};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormal {
    pub log_mean: f64,
    pub log_sd: f64,
}

impl LogNormal {
    pub const fn new(log_mean: f64, log_sd: f64) -> Self {
        Self { log_mean, log_sd }
    }

    pub fn inverse_cdf(&self, u: f64) -> f64 {
        (self.log_mean + self.log_sd * norm_quantile(open_unit(u))).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        norm_cdf((x.ln() - self.log_mean) / self.log_sd)
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return f64::NEG_INFINITY;
        }
        let lx = x.ln();
        normal_log_pdf(lx, self.log_mean, self.log_sd * self.log_sd) - lx
    }

    /// Density of `log x` and its derivative.
    fn log_pdf_of_log(&self, z: f64) -> (f64, f64) {
        let v = self.log_sd * self.log_sd;
        (normal_log_pdf(z, self.log_mean, v), -(z - self.log_mean) / v)
    }
}

/// Weakly informative default used for weights, bandwidths, noise.
pub const DEFAULT_LOGNORMAL: LogNormal = LogNormal::new(0.0, 2.0);
pub const DEFAULT_FREQ_LOGNORMAL_SD: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrequencyPrior {
    /// `mu / f_fun ~ Lognormal(0, lognormal_sd)` below `f_fun` and
    /// `Uniform(1, f_nyq / f_fun)` above, mass 1/2 each.
    Piecewise { lognormal_sd: f64 },
    /// `mu / f_fun ~ Lognormal(log_mean, log_sd)` without an upper cutoff.
    LogNormal(LogNormal),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    pub q_components: usize,
    pub dims: usize,
    pub f_fun: Vec<f64>,
    pub f_nyq: Vec<f64>,
    pub weight_prior: LogNormal,
    pub bandwidth_prior: LogNormal,
    pub noise_prior: LogNormal,
    pub frequency_prior: FrequencyPrior,
    /// Force ascending first-dimension frequencies.
    pub identifiability: bool,
}

impl PriorSpec {
    /// Piecewise frequency prior with log-normal(0, 2) elsewhere.
    pub fn piecewise(q: usize, bounds: &FrequencyBounds) -> Self {
        Self {
            q_components: q,
            dims: bounds.f_fun.len(),
            f_fun: bounds.f_fun.clone(),
            f_nyq: bounds.f_nyq.clone(),
            weight_prior: DEFAULT_LOGNORMAL,
            bandwidth_prior: DEFAULT_LOGNORMAL,
            noise_prior: DEFAULT_LOGNORMAL,
            frequency_prior: FrequencyPrior::Piecewise {
                lognormal_sd: DEFAULT_FREQ_LOGNORMAL_SD,
            },
            identifiability: true,
        }
    }

    /// Log-normal(0, 2) on every hyperparameter, frequencies included.
    pub fn all_lognormal(q: usize, bounds: &FrequencyBounds) -> Self {
        Self {
            frequency_prior: FrequencyPrior::LogNormal(DEFAULT_LOGNORMAL),
            identifiability: false,
            ..Self::piecewise(q, bounds)
        }
    }

    pub fn with_identifiability(mut self, on: bool) -> Self {
        self.identifiability = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.q_components == 0 || self.dims == 0 {
            return Err(Error::InvalidConfig("Q and D must be positive".into()));
        }
        if self.f_fun.len() != self.dims || self.f_nyq.len() != self.dims {
            return Err(Error::InvalidConfig(
                "frequency bounds need one entry per dimension".into(),
            ));
        }
        for (ff, fn_) in self.f_fun.iter().zip(&self.f_nyq) {
            if !(*ff > 0.0 && fn_ > ff) {
                return Err(Error::InvalidConfig(format!(
                    "need f_nyq > f_fun > 0, got f_fun={ff} f_nyq={fn_}"
                )));
            }
        }
        let sds = [
            self.weight_prior.log_sd,
            self.bandwidth_prior.log_sd,
            self.noise_prior.log_sd,
            match self.frequency_prior {
                FrequencyPrior::Piecewise { lognormal_sd } => lognormal_sd,
                FrequencyPrior::LogNormal(ln) => ln.log_sd,
            },
        ];
        if sds.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidConfig("prior scales must be positive".into()));
        }
        Ok(())
    }

    /// Dimension of the unit cube, `Q(1 + 2D) + 1`.
    pub fn n_params(&self) -> usize {
        param_count(self.q_components, self.dims)
    }

    fn freq_inverse_cdf(&self, u: f64, dim: usize) -> f64 {
        let (ff, fnq) = (self.f_fun[dim], self.f_nyq[dim]);
        match self.frequency_prior {
            FrequencyPrior::Piecewise { lognormal_sd } => piecewise_inverse_cdf(u, ff, fnq, lognormal_sd),
            FrequencyPrior::LogNormal(ln) => ff * ln.inverse_cdf(u),
        }
    }

    fn freq_cdf(&self, mu: f64, dim: usize) -> f64 {
        let (ff, fnq) = (self.f_fun[dim], self.f_nyq[dim]);
        match self.frequency_prior {
            FrequencyPrior::Piecewise { lognormal_sd } => freq_prior_cdf(mu, ff, fnq, lognormal_sd),
            FrequencyPrior::LogNormal(ln) => ln.cdf(mu / ff),
        }
    }

    fn freq_log_pdf(&self, mu: f64, dim: usize) -> f64 {
        let (ff, fnq) = (self.f_fun[dim], self.f_nyq[dim]);
        match self.frequency_prior {
            FrequencyPrior::Piecewise { lognormal_sd } => freq_prior_log_pdf(mu, ff, fnq, lognormal_sd),
            FrequencyPrior::LogNormal(ln) => ln.log_pdf(mu / ff) - ff.ln(),
        }
    }

    /// Log density of `z = log mu` and its derivative.
    fn freq_log_pdf_of_log(&self, z: f64, dim: usize) -> (f64, f64) {
        let lf = self.f_fun[dim].ln();
        match self.frequency_prior {
            FrequencyPrior::Piecewise { lognormal_sd } => {
                let r_log = z - lf;
                let upper = (self.f_nyq[dim] / self.f_fun[dim]).ln();
                if r_log < 0.0 {
                    LogNormal::new(0.0, lognormal_sd).log_pdf_of_log(r_log)
                } else if r_log <= upper {
                    let ratio = self.f_nyq[dim] / self.f_fun[dim];
                    ((0.5 / (ratio - 1.0)).ln() + r_log, 1.0)
                } else {
                    (f64::NEG_INFINITY, 0.0)
                }
            }
            FrequencyPrior::LogNormal(ln) => ln.log_pdf_of_log(z - lf),
        }
    }
}

fn ln_factorial(q: usize) -> f64 {
    (2..=q).map(|k| (k as f64).ln()).sum()
}

/// Keeps quantile-function arguments strictly inside (0, 1).
fn open_unit(u: f64) -> f64 {
    u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

fn check_unit(u: f64) -> Result<()> {
    if (0.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(Error::Domain(format!("cube coordinate {u} outside [0, 1]")))
    }
}

fn piecewise_inverse_cdf(u: f64, f_fun: f64, f_nyq: f64, sd: f64) -> f64 {
    if u < 0.5 {
        // Lower branch: CDF is Phi(ln(mu / f_fun) / sd) on (0, f_fun).
        f_fun * (sd * norm_quantile(u)).exp()
    } else {
        f_fun * (1.0 + 2.0 * (u - 0.5) * (f_nyq / f_fun - 1.0))
    }
}

/// Quantile function of the two-branch frequency prior.
pub fn freq_prior_inverse_cdf(u: f64, f_fun: f64, f_nyq: f64, lognormal_sd: f64) -> Result<f64> {
    check_unit(u)?;
    if !(f_nyq > f_fun && f_fun > 0.0) {
        return Err(Error::Domain(format!("need f_nyq > f_fun > 0 (got {f_fun}, {f_nyq})")));
    }
    Ok(piecewise_inverse_cdf(u, f_fun, f_nyq, lognormal_sd))
}

pub fn freq_prior_cdf(mu: f64, f_fun: f64, f_nyq: f64, lognormal_sd: f64) -> f64 {
    if mu <= 0.0 {
        0.0
    } else if mu < f_fun {
        norm_cdf((mu / f_fun).ln() / lognormal_sd)
    } else if mu <= f_nyq {
        0.5 + 0.5 * (mu / f_fun - 1.0) / (f_nyq / f_fun - 1.0)
    } else {
        1.0
    }
}

pub fn freq_prior_log_pdf(mu: f64, f_fun: f64, f_nyq: f64, lognormal_sd: f64) -> f64 {
    if !(mu > 0.0) || mu > f_nyq {
        f64::NEG_INFINITY
    } else if mu < f_fun {
        LogNormal::new(0.0, lognormal_sd).log_pdf(mu / f_fun) - f_fun.ln()
    } else {
        (0.5 / (f_nyq - f_fun)).ln()
    }
}

/// A point in the sampling hypercube.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitCubePoint(Vec<f64>);

impl UnitCubePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        for &u in &coords {
            check_unit(u)?;
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Maps Q iid uniforms to ascending uniforms (order statistics).
fn ordered_uniforms(u: &[f64]) -> Vec<f64> {
    let q = u.len();
    let mut t = vec![0.0; q];
    let mut upper = 1.0;
    for k in (0..q).rev() {
        upper *= u[k].powf(1.0 / (k + 1) as f64);
        t[k] = upper;
    }
    t
}

fn unordered_uniforms(t: &[f64]) -> Vec<f64> {
    let q = t.len();
    (0..q)
        .map(|k| {
            let next = if k + 1 < q { t[k + 1] } else { 1.0 };
            if next <= 0.0 {
                0.0
            } else {
                (t[k] / next).min(1.0).powi(k as i32 + 1)
            }
        })
        .collect()
}

pub fn unit_cube_transform(u: &UnitCubePoint, spec: &PriorSpec) -> Result<SmHyperParams> {
    if u.coords().len() != spec.n_params() {
        return Err(Error::Shape(format!(
            "cube point has {} coordinates, prior expects {}",
            u.coords().len(),
            spec.n_params()
        )));
    }
    Ok(transform_unchecked(u.coords(), spec))
}

/// Cube-to-hyperparameter map without range checks; coordinates are assumed
/// to lie in [0, 1].
pub fn transform_unchecked(u: &[f64], spec: &PriorSpec) -> SmHyperParams {
    let (q, d) = (spec.q_components, spec.dims);
    let stride = 1 + 2 * d;
    let first_freq: Vec<f64> = if spec.identifiability {
        let raw: Vec<f64> = (0..q).map(|i| u[i * stride + 1]).collect();
        ordered_uniforms(&raw)
    } else {
        (0..q).map(|i| u[i * stride + 1]).collect()
    };
    let components = (0..q)
        .map(|i| {
            let b = &u[i * stride..(i + 1) * stride];
            let mean_freq = (0..d)
                .map(|k| {
                    let uk = if k == 0 { first_freq[i] } else { b[1 + k] };
                    spec.freq_inverse_cdf(uk, k)
                })
                .collect();
            SpectralComponent {
                weight: spec.weight_prior.inverse_cdf(b[0]),
                mean_freq,
                bandwidth: (0..d).map(|k| spec.bandwidth_prior.inverse_cdf(b[1 + d + k])).collect(),
            }
        })
        .collect();
    SmHyperParams {
        components,
        noise_variance: spec.noise_prior.inverse_cdf(u[q * stride]),
    }
}

/// Inverse of [`unit_cube_transform`] via the forward CDFs.
pub fn cube_from_params(params: &SmHyperParams, spec: &PriorSpec) -> Result<UnitCubePoint> {
    let (q, d) = (spec.q_components, spec.dims);
    if params.q() != q || params.dims() != d {
        return Err(Error::Shape("parameters do not match the prior's Q and D".into()));
    }
    let mut u = Vec::with_capacity(spec.n_params());
    for c in &params.components {
        u.push(spec.weight_prior.cdf(c.weight));
        u.extend(c.mean_freq.iter().enumerate().map(|(k, m)| spec.freq_cdf(*m, k)));
        u.extend(c.bandwidth.iter().map(|s| spec.bandwidth_prior.cdf(*s)));
    }
    u.push(spec.noise_prior.cdf(params.noise_variance));
    if spec.identifiability {
        let stride = 1 + 2 * d;
        let t: Vec<f64> = (0..q).map(|i| u[i * stride + 1]).collect();
        if t.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Domain("frequencies are not in ascending order".into()));
        }
        for (i, v) in unordered_uniforms(&t).into_iter().enumerate() {
            u[i * stride + 1] = v;
        }
    }
    UnitCubePoint::new(u)
}

/// Log prior density of constrained hyperparameters; `-inf` outside support.
pub fn log_prior_density(params: &SmHyperParams, spec: &PriorSpec) -> f64 {
    if params.q() != spec.q_components || params.dims() != spec.dims {
        return f64::NEG_INFINITY;
    }
    let mut lp = spec.noise_prior.log_pdf(params.noise_variance);
    for c in &params.components {
        lp += spec.weight_prior.log_pdf(c.weight);
        lp += c
            .mean_freq
            .iter()
            .enumerate()
            .map(|(k, m)| spec.freq_log_pdf(*m, k))
            .sum::<f64>();
        lp += c
            .bandwidth
            .iter()
            .map(|s| spec.bandwidth_prior.log_pdf(*s))
            .sum::<f64>();
    }
    if spec.identifiability {
        if !first_freqs_ascending(params) {
            return f64::NEG_INFINITY;
        }
        lp += ln_factorial(spec.q_components);
    }
    lp
}

fn first_freqs_ascending(params: &SmHyperParams) -> bool {
    params
        .components
        .windows(2)
        .all(|w| w[0].mean_freq[0] <= w[1].mean_freq[0])
}

/// Log density of the log-space vector `z` (see [`SmHyperParams::to_log_vec`])
/// and its gradient. Includes the change-of-variables Jacobian.
pub fn log_prior_unconstrained(z: &[f64], spec: &PriorSpec) -> (f64, Vec<f64>) {
    let (q, d) = (spec.q_components, spec.dims);
    let stride = 1 + 2 * d;
    let mut grad = vec![0.0; z.len()];
    let mut lp = 0.0;
    for i in 0..q {
        let b = i * stride;
        let (v, g) = spec.weight_prior.log_pdf_of_log(z[b]);
        lp += v;
        grad[b] = g;
        for k in 0..d {
            let (v, g) = spec.freq_log_pdf_of_log(z[b + 1 + k], k);
            lp += v;
            grad[b + 1 + k] = g;
            let (v, g) = spec.bandwidth_prior.log_pdf_of_log(z[b + 1 + d + k]);
            lp += v;
            grad[b + 1 + d + k] = g;
        }
    }
    let (v, g) = spec.noise_prior.log_pdf_of_log(z[q * stride]);
    lp += v;
    grad[q * stride] = g;
    if spec.identifiability {
        let ascending = (1..q).all(|i| z[(i - 1) * stride + 1] <= z[i * stride + 1]);
        if !ascending {
            return (f64::NEG_INFINITY, grad);
        }
        lp += ln_factorial(q);
    }
    (lp, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bounds() -> FrequencyBounds {
        FrequencyBounds {
            f_fun: vec![1.0],
            f_nyq: vec![64.0],
        }
    }

    #[test]
    fn frequency_quantiles() {
        assert_relative_eq!(freq_prior_inverse_cdf(0.5, 1.0, 64.0, 7.0).unwrap(), 1.0);
        assert_relative_eq!(freq_prior_inverse_cdf(0.75, 1.0, 64.0, 7.0).unwrap(), 32.5);
        // exp(7 * Phi^-1(0.25)), Phi^-1(0.25) = -0.6744897501960817
        assert_relative_eq!(
            freq_prior_inverse_cdf(0.25, 1.0, 64.0, 7.0).unwrap(),
            (-4.721_428_251_372_572f64).exp(),
            max_relative = 1e-12
        );
        assert!((freq_prior_inverse_cdf(0.25, 1.0, 64.0, 7.0).unwrap() - 0.00890).abs() < 5e-6);
        assert_eq!(freq_prior_inverse_cdf(1.0, 1.0, 64.0, 7.0).unwrap(), 64.0);
        assert!(freq_prior_inverse_cdf(1.2, 1.0, 64.0, 7.0).is_err());
        assert!(freq_prior_inverse_cdf(-0.1, 1.0, 64.0, 7.0).is_err());
        assert!(freq_prior_inverse_cdf(0.3, 2.0, 1.0, 7.0).is_err());
    }

    #[test]
    fn continuous_at_branch_boundary() {
        let below = freq_prior_inverse_cdf(0.5 - 1e-12, 1.0, 64.0, 7.0).unwrap();
        assert!((below - 1.0).abs() < 1e-9);
    }

    #[test]
    fn medians_when_all_half() {
        let spec = PriorSpec::piecewise(3, &bounds()).with_identifiability(false);
        let u = UnitCubePoint::new(vec![0.5; spec.n_params()]).unwrap();
        let p = unit_cube_transform(&u, &spec).unwrap();
        for c in &p.components {
            assert_relative_eq!(c.weight, 1.0);
            assert_relative_eq!(c.bandwidth[0], 1.0);
            assert_relative_eq!(c.mean_freq[0], 1.0);
        }
        assert_relative_eq!(p.noise_variance, 1.0);
    }

    #[test]
    fn lognormal_density_at_median() {
        assert_relative_eq!(
            DEFAULT_LOGNORMAL.log_pdf(1.0),
            -(2.0 * (2.0 * std::f64::consts::PI).sqrt()).ln(),
            epsilon = 1e-14
        );
        assert!((DEFAULT_LOGNORMAL.log_pdf(1.0) + 1.612).abs() < 1e-3);
    }

    #[test]
    fn outside_nyquist_is_impossible() {
        let spec = PriorSpec::piecewise(1, &bounds());
        let p = SmHyperParams::new(vec![SpectralComponent::scalar(1.0, 1.5 * 64.0, 1.0)], 1.0).unwrap();
        assert_eq!(log_prior_density(&p, &spec), f64::NEG_INFINITY);
    }

    #[test]
    fn unsorted_frequencies_rejected_under_identifiability() {
        let spec = PriorSpec::piecewise(2, &bounds());
        let p = SmHyperParams::new(
            vec![
                SpectralComponent::scalar(1.0, 5.0, 1.0),
                SpectralComponent::scalar(1.0, 2.0, 1.0),
            ],
            1.0,
        )
        .unwrap();
        assert_eq!(log_prior_density(&p, &spec), f64::NEG_INFINITY);
        assert!(cube_from_params(&p, &spec).is_err());
        let free = spec.clone().with_identifiability(false);
        assert!(log_prior_density(&p, &free).is_finite());
    }

    #[test]
    fn order_statistics_round_trip() {
        let u = [0.3, 0.9, 0.05, 0.6];
        let t = ordered_uniforms(&u);
        assert!(t.windows(2).all(|w| w[0] <= w[1]));
        let back = unordered_uniforms(&t);
        for (a, b) in u.iter().zip(&back) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn unconstrained_density_matches_change_of_variables() {
        let spec = PriorSpec::piecewise(2, &bounds());
        let p = SmHyperParams::new(
            vec![
                SpectralComponent::scalar(0.7, 0.3, 0.4),
                SpectralComponent::scalar(1.3, 12.0, 2.0),
            ],
            0.05,
        )
        .unwrap();
        let z = p.to_log_vec();
        let (lz, grad) = log_prior_unconstrained(&z, &spec);
        let jac: f64 = z.iter().sum();
        assert_relative_eq!(lz, log_prior_density(&p, &spec) + jac, epsilon = 1e-10);
        let h = 1e-6;
        for k in 0..z.len() {
            let mut a = z.clone();
            let mut b = z.clone();
            a[k] += h;
            b[k] -= h;
            let fd = (log_prior_unconstrained(&a, &spec).0 - log_prior_unconstrained(&b, &spec).0) / (2.0 * h);
            assert!((fd - grad[k]).abs() < 1e-6, "coord {k}: {fd} vs {}", grad[k]);
        }
    }

    #[test]
    fn spec_validation() {
        let mut spec = PriorSpec::piecewise(2, &bounds());
        assert!(spec.validate().is_ok());
        spec.f_nyq = vec![0.5];
        assert!(spec.validate().is_err());
        let mut spec = PriorSpec::piecewise(2, &bounds());
        spec.noise_prior.log_sd = 0.0;
        assert!(spec.validate().is_err());
    }
}
