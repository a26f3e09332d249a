//! Synthetic GP draws and the 2-D pattern task.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use mgpns_core::kernel::gram_matrix;
use mgpns_core::{Dataset, Error as CoreError, SmHyperParams, SpectralComponent};

use crate::error::Result;

pub const DEFAULT_DOMAIN: (f64, f64) = (-1.0, 1.0);

/// Two-component ground truth with frequencies 2 and 5.
pub fn preset_two_five() -> SmHyperParams {
    two_component([0.5, 0.5], [2.0, 5.0], [0.25, 0.25])
}

/// Two-component ground truth with frequencies 3.14 and 12.56.
#[allow(clippy::approx_constant)]
pub fn preset_pi() -> SmHyperParams {
    two_component([0.5, 0.5], [3.14, 12.56], [1.27, 0.32])
}

fn two_component(w: [f64; 2], mu: [f64; 2], sigma: [f64; 2]) -> SmHyperParams {
    let comps = (0..2)
        .map(|i| SpectralComponent::scalar(w[i], mu[i], sigma[i]))
        .collect();
    // The generator takes the noise level separately.
    SmHyperParams::new(comps, 0.01).expect("preset is valid")
}

/// Lower Cholesky factor of `k` with the smallest diagonal jitter, starting
/// at `1e-10 * mean(diag)`, that makes it factorisable.
fn jittered_cholesky(mut k: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = k.nrows();
    let mean_diag = k.diagonal().mean();
    let mut rel = 1e-10;
    let mut added = 0.0;
    while rel <= 1e-4 {
        let target = rel * mean_diag;
        for i in 0..n {
            k[(i, i)] += target - added;
        }
        added = target;
        if let Some(c) = k.clone().cholesky() {
            return Ok(c.unpack());
        }
        rel *= 10.0;
    }
    Err(CoreError::FactorizationFailure { jitter: rel / 10.0 }.into())
}

/// Draws `n` inputs uniformly on `domain`, a latent function from the GP
/// prior with `true_params`' kernel and targets with i.i.d. Gaussian noise of
/// standard deviation `noise_sd`. The noise variance stored in `true_params`
/// is ignored. Inputs are returned sorted.
pub fn synth_generate<R: Rng>(
    true_params: &SmHyperParams,
    n: usize,
    noise_sd: f64,
    domain: (f64, f64),
    rng: &mut R,
) -> Result<(Dataset, Vec<f64>)> {
    if n < 2 {
        return Err(CoreError::DegenerateData("need at least two synthetic points".into()).into());
    }
    if !(noise_sd >= 0.0) || !(domain.1 > domain.0) || true_params.dims() != 1 {
        return Err(CoreError::Domain("invalid synthetic generator arguments".into()).into());
    }
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(domain.0..domain.1)).collect();
    x.sort_by(f64::total_cmp);
    let latent = sample_latent(true_params, &DMatrix::from_column_slice(n, 1, &x), rng)?;
    let y: Vec<f64> = latent
        .iter()
        .map(|f| {
            let e: f64 = rng.sample(StandardNormal);
            f + noise_sd * e
        })
        .collect();
    Ok((Dataset::from_1d(&x, &y)?, latent))
}

/// One draw of the latent function at `x` from the zero-mean GP prior.
pub fn sample_latent<R: Rng>(params: &SmHyperParams, x: &DMatrix<f64>, rng: &mut R) -> Result<Vec<f64>> {
    let l = jittered_cholesky(gram_matrix(x, params))?;
    let z = DVector::from_fn(x.nrows(), |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok((l * z).iter().copied().collect())
}

pub const PATTERN_HALF_WIDTH: f64 = 6.0;

/// The 2-D ground truth `cos(2 x1) cos(2 x2) sqrt(|x1 x2|)`.
pub fn pattern_fn(x1: f64, x2: f64) -> f64 {
    (2.0 * x1).cos() * (2.0 * x2).cos() * (x1 * x2).abs().sqrt()
}

/// Noiseless pattern evaluations at `n_train` uniform points on the square
/// and on a `grid x grid` regular test grid covering it.
pub fn pattern2d_generate<R: Rng>(n_train: usize, grid: usize, rng: &mut R) -> Result<(Dataset, Dataset)> {
    if n_train < 1 || grid < 2 {
        return Err(CoreError::Domain("pattern2d needs n_train >= 1 and grid >= 2".into()).into());
    }
    let h = PATTERN_HALF_WIDTH;
    let train_x = DMatrix::from_fn(n_train, 2, |_, _| rng.random_range(-h..h));
    let train_y = DVector::from_fn(n_train, |i, _| pattern_fn(train_x[(i, 0)], train_x[(i, 1)]));
    let ticks: Vec<f64> = (0..grid).map(|i| -h + 2.0 * h * i as f64 / (grid - 1) as f64).collect();
    let test_x = DMatrix::from_fn(
        grid * grid,
        2,
        |r, c| {
            if c == 0 {
                ticks[r / grid]
            } else {
                ticks[r % grid]
            }
        },
    );
    let test_y = DVector::from_fn(grid * grid, |i, _| pattern_fn(test_x[(i, 0)], test_x[(i, 1)]));
    Ok((Dataset::new(train_x, train_y)?, Dataset::new(test_x, test_y)?))
}
