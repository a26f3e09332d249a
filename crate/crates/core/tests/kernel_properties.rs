mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mgpns_core::kernel::{cross_gram, gram_matrix, gram_matrix_with, sm_kernel, spectral_density};
use mgpns_core::{Execution, SmHyperParams};

use common::random_params;

fn params_strategy(q: usize, d: usize) -> impl Strategy<Value = SmHyperParams> {
    any::<u64>().prop_map(move |s| random_params(&mut ChaCha8Rng::seed_from_u64(s), q, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn kernel_is_even_and_bounded(p in params_strategy(3, 2), t0 in -3.0..3.0f64, t1 in -3.0..3.0f64) {
        let k = sm_kernel(&[t0, t1], &p);
        let km = sm_kernel(&[-t0, -t1], &p);
        prop_assert!((k - km).abs() < 1e-14);
        prop_assert!(k.abs() <= p.signal_variance() * (1.0 + 1e-12));
        prop_assert!((sm_kernel(&[0.0, 0.0], &p) - p.signal_variance()).abs() < 1e-12);
    }

    #[test]
    fn component_order_is_irrelevant(p in params_strategy(4, 1), t in -2.0..2.0f64, seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut shuffled = p.clone();
        shuffled.components.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!((sm_kernel(&[t], &p) - sm_kernel(&[t], &shuffled)).abs() < 1e-12);
    }

    #[test]
    fn gram_depends_only_on_differences(p in params_strategy(2, 1), shift in -10.0..10.0f64, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(8, 1, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let xs = x.map(|v| v + shift);
        let a = gram_matrix(&x, &p);
        let b = gram_matrix(&xs, &p);
        prop_assert!((a - b).abs().max() < 1e-9);
    }

    #[test]
    fn spectral_density_is_even_and_nonnegative(p in params_strategy(3, 1), nu in -20.0..20.0f64) {
        let s = spectral_density(nu, &p).unwrap();
        prop_assert!(s >= 0.0);
        prop_assert!((s - spectral_density(-nu, &p).unwrap()).abs() <= 1e-14 * s.max(1.0));
    }
}

#[test]
fn gram_is_symmetric_positive_semidefinite() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let p = random_params(&mut rng, 3, 2);
        let x = DMatrix::from_fn(25, 2, |_, _| rand::Rng::random_range(&mut rng, -2.0..2.0));
        let k = gram_matrix(&x, &p);
        assert_eq!(k, k.transpose());
        let min_eig = k.clone().symmetric_eigenvalues().min();
        assert!(min_eig > -1e-10 * p.signal_variance(), "min eigenvalue {min_eig}");
        assert_eq!(cross_gram(&x, &x, &p), k);
    }
}

#[test]
fn execution_modes_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let p = random_params(&mut rng, 2, 1);
    let x = DMatrix::from_fn(150, 1, |i, _| i as f64 * 0.01);
    assert_eq!(
        gram_matrix_with(&x, &p, Execution::Sequential),
        gram_matrix_with(&x, &p, Execution::Parallel)
    );
}

/// Trapezoidal cosine transform of the spectral density over a range wide
/// enough to hold all of its mass.
fn bochner(tau: f64, p: &SmHyperParams) -> f64 {
    let hi = p
        .components
        .iter()
        .map(|c| c.mean_freq[0] + 12.0 * c.bandwidth[0])
        .fold(0.0, f64::max);
    let n = 200_000;
    let h = 2.0 * hi / n as f64;
    (0..=n)
        .map(|i| {
            let nu = -hi + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            w * spectral_density(nu, p).unwrap() * (std::f64::consts::TAU * nu * tau).cos()
        })
        .sum::<f64>()
        * h
}

#[test]
fn kernel_is_fourier_transform_of_density() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..3 {
        let p = random_params(&mut rng, 2, 1);
        for i in 0..10 {
            let tau = i as f64 * 0.2;
            let err = (bochner(tau, &p) - sm_kernel(&[tau], &p)).abs();
            assert!(err < 1e-6, "tau {tau}: error {err}");
        }
    }
}
