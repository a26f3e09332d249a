#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;

use mgpns_core::{Dataset, SmHyperParams, SpectralComponent};

pub fn random_params<R: Rng>(rng: &mut R, q: usize, d: usize) -> SmHyperParams {
    let comps = (0..q)
        .map(|_| {
            SpectralComponent::new(
                rng.random_range(0.2..2.0),
                (0..d).map(|_| rng.random_range(0.1..5.0)).collect(),
                (0..d).map(|_| rng.random_range(0.05..1.5)).collect(),
            )
        })
        .collect();
    SmHyperParams::new(comps, rng.random_range(0.01..0.5)).unwrap()
}

pub fn random_dataset<R: Rng>(rng: &mut R, n: usize, d: usize) -> Dataset {
    let x = DMatrix::from_fn(n, d, |_, _| rng.random_range(0.0..1.0f64));
    let y = nalgebra::DVector::from_fn(n, |i, _| (6.0 * x[(i, 0)]).sin() + rng.random_range(-0.3..0.3));
    Dataset::new(x, y).unwrap()
}

/// Relative error with an absolute floor of 1 in the denominator.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
