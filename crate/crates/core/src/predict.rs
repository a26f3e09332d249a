//! Gaussian-mixture predictive from a set of hyperparameter draws, and the
//! scores reported on it. Scores are computed in original target units.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{Dataset, NormRecord};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gp::{condition, GaussianPredictive};
use crate::kernel::SmHyperParams;
use crate::stats::{log_sum_exp, normal_log_pdf, quantile_sorted};

/// Equal-weight mixture of per-draw Gaussian predictives over shared test
/// points, in model units.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveMixture {
    pub components: Vec<GaussianPredictive>,
    pub weights: Vec<f64>,
    /// Draws dropped because their covariance could not be factorised.
    pub failed: usize,
}

impl PredictiveMixture {
    /// Builds a mixture from explicit components, normalising the weights.
    pub fn new(components: Vec<GaussianPredictive>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() || components.len() != weights.len() {
            return Err(Error::Shape("need one weight per non-empty component list".into()));
        }
        let n = components[0].mean.len();
        if components.iter().any(|c| c.mean.len() != n || c.variance.len() != n) {
            return Err(Error::Shape("components cover different test points".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Domain("mixture weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Domain("mixture weights sum to zero".into()));
        }
        Ok(Self {
            components,
            weights: weights.iter().map(|w| w / total).collect(),
            failed: 0,
        })
    }

    pub fn n_points(&self) -> usize {
        self.components[0].mean.len()
    }

    /// `(mean, variance, weight)` triples at test point `i`, model units.
    pub fn point(&self, i: usize) -> Vec<(f64, f64, f64)> {
        self.components
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| (c.mean[i], c.variance[i], *w))
            .collect()
    }

    /// Mixture mean at every test point, original units.
    pub fn mean(&self, norm: &NormRecord) -> Vec<f64> {
        (0..self.n_points())
            .map(|i| {
                let m: f64 = self.point(i).iter().map(|(m, _, w)| m * w).sum();
                norm.denormalize_mean(m)
            })
            .collect()
    }

    /// Log predictive density of original-units `y` at test point `i`.
    pub fn log_density(&self, i: usize, y: f64, norm: &NormRecord) -> f64 {
        let terms: Vec<f64> = self
            .point(i)
            .into_iter()
            .map(|(m, v, w)| w.ln() + normal_log_pdf(y, norm.denormalize_mean(m), norm.denormalize_variance(v)))
            .collect();
        log_sum_exp(&terms)
    }
}

/// Mixture predictive with uniform weights over `thetas`.
pub fn mixture_predict(data: &Dataset, thetas: &[SmHyperParams], xstar: &DMatrix<f64>) -> Result<PredictiveMixture> {
    mixture_predict_with(data, thetas, xstar, Execution::default())
}

pub fn mixture_predict_with(
    data: &Dataset,
    thetas: &[SmHyperParams],
    xstar: &DMatrix<f64>,
    execution: Execution,
) -> Result<PredictiveMixture> {
    if thetas.is_empty() {
        return Err(Error::AllComponentsFailed);
    }
    if xstar.ncols() != data.dims() {
        return Err(Error::Shape("test inputs have the wrong dimension".into()));
    }
    let results = execution.map_slice(thetas, |t| condition(data, t).map(|c| c.predict(xstar)));
    let mut components = Vec::with_capacity(thetas.len());
    let mut failed = 0;
    for r in results {
        match r {
            Ok(c) if c.mean.iter().chain(&c.variance).all(|v| v.is_finite()) => components.push(c),
            _ => failed += 1,
        }
    }
    if components.is_empty() {
        return Err(Error::AllComponentsFailed);
    }
    let w = 1.0 / components.len() as f64;
    let weights = vec![w; components.len()];
    Ok(PredictiveMixture {
        components,
        weights,
        failed,
    })
}

/// Mean negative log predictive density of `y_true` (original units).
pub fn nlpd(mix: &PredictiveMixture, y_true: &[f64], norm: &NormRecord) -> f64 {
    assert_eq!(y_true.len(), mix.n_points(), "one target per test point");
    let total: f64 = y_true
        .iter()
        .enumerate()
        .map(|(i, &y)| -mix.log_density(i, y, norm))
        .sum();
    total / y_true.len() as f64
}

/// Empirical quantiles per test point from `n_draws` mixture samples,
/// returned in original units as `bounds[point][level]`.
pub fn mixture_quantiles<R: Rng>(
    mix: &PredictiveMixture,
    levels: &[f64],
    n_draws: usize,
    norm: &NormRecord,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    mixture_quantiles_with(mix, levels, n_draws, norm, rng, Execution::default())
}

pub fn mixture_quantiles_with<R: Rng>(
    mix: &PredictiveMixture,
    levels: &[f64],
    n_draws: usize,
    norm: &NormRecord,
    rng: &mut R,
    execution: Execution,
) -> Result<Vec<Vec<f64>>> {
    if levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
        return Err(Error::Domain("quantile levels must lie in (0, 1)".into()));
    }
    if n_draws < 100 {
        return Err(Error::Domain("at least 100 draws required".into()));
    }
    let seed: u64 = rng.random();
    let cum: Vec<f64> = mix
        .weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    Ok(execution.map_range(mix.n_points(), |i| {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        r.set_stream(i as u64);
        let comps = mix.point(i);
        let mut draws: Vec<f64> = (0..n_draws)
            .map(|_| {
                let u: f64 = r.random::<f64>() * cum[cum.len() - 1];
                let j = cum.partition_point(|c| *c <= u).min(comps.len() - 1);
                let (m, v, _) = comps[j];
                let z: f64 = r.sample(StandardNormal);
                norm.denormalize_mean(m + v.sqrt() * z)
            })
            .collect();
        draws.sort_by(f64::total_cmp);
        levels.iter().map(|l| quantile_sorted(&draws, *l)).collect()
    }))
}

/// Fraction of `y_true` inside `[lower, upper]`.
pub fn coverage(bounds: &[(f64, f64)], y_true: &[f64]) -> f64 {
    assert_eq!(bounds.len(), y_true.len(), "one interval per target");
    let inside = bounds
        .iter()
        .zip(y_true)
        .filter(|((lo, hi), y)| lo <= *y && *y <= hi)
        .count();
    inside as f64 / y_true.len() as f64
}
