//! End-to-end acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs as part of `cargo test`. Pass criterion numbers to run a subset,
//! e.g. `cargo test --test acceptance -- 3 4`. The series for criteria 7 and
//! 8 are read from `MGPNS_SERIES_DIR`, defaulting to the bundled set.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mgpns_bench::config::{ExperimentConfig, Method, Task};
use mgpns_bench::experiment::{prepare_source, run_experiment, ResultRow, Source};
use mgpns_core::gp::{lml_gradient, log_marginal_likelihood, GaussianPredictive};
use mgpns_core::hmc::{hmc_run, sample, HmcConfig};
use mgpns_core::kernel::{sm_kernel, spectral_density};
use mgpns_core::ml2::{ml2_train, Ml2Config};
use mgpns_core::nested::{resample_equal, run_nested, systematic_indices, NestedConfig, UnitCube};
use mgpns_core::predict::{mixture_quantiles, PredictiveMixture};
use mgpns_core::priors::{cube_from_params, unit_cube_transform, PriorSpec, UnitCubePoint};
use mgpns_core::stats::{norm_cdf, normal_log_pdf};
use mgpns_core::{Dataset, Execution, NormRecord, SmHyperParams, SpectralComponent};

const CASES: u32 = 1000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, budget_secs: f64) -> bool {
    elapsed.as_secs_f64() < budget_secs
}

fn random_params<R: Rng>(rng: &mut R, q: usize) -> SmHyperParams {
    let comps = (0..q)
        .map(|_| {
            SpectralComponent::scalar(
                rng.random_range(0.2..2.0),
                rng.random_range(0.1..5.0),
                rng.random_range(0.05..1.5),
            )
        })
        .collect();
    SmHyperParams::new(comps, rng.random_range(0.01..0.5)).unwrap()
}

fn gradient_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let x: Vec<f64> = (0..20).map(|_| rng.random_range(0.0..1.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| (6.0 * v).sin() + rng.random_range(-0.3..0.3))
            .collect();
        let data = Dataset::from_1d(&x, &y).unwrap();
        let p = random_params(&mut rng, 2);
        let g = lml_gradient(&data, &p).unwrap();
        let z = p.to_log_vec();
        let f = |z: &[f64]| log_marginal_likelihood(&data, &SmHyperParams::from_log_vec(z, 2, 1)).unwrap();
        let h = 1e-5;
        for j in 0..z.len() {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[j] += h;
            zm[j] -= h;
            let fd = (f(&zp) - f(&zm)) / (2.0 * h);
            worst = worst.max((g[j] - fd).abs() / g[j].abs().max(fd.abs()).max(1.0));
        }
    }
    let t = start.elapsed();
    outcome(
        worst < 1e-5 && within(t, 10.0),
        format!(
            "max relative error {worst:.2e} over 20 instances, {:.1} s",
            t.as_secs_f64()
        ),
    )
}

/// Trapezoidal cosine transform of the spectral density.
fn bochner(tau: f64, p: &SmHyperParams) -> f64 {
    let hi = p
        .components
        .iter()
        .map(|c| c.mean_freq[0] + 12.0 * c.bandwidth[0])
        .fold(0.0, f64::max);
    let n = 100_000;
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

fn bochner_consistency() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let p = random_params(&mut rng, 2);
        for i in 0..50 {
            let tau = i as f64 * 0.05;
            worst = worst.max((bochner(tau, &p) - sm_kernel(&[tau], &p)).abs());
        }
    }
    let t = start.elapsed();
    outcome(
        worst < 1e-6 && within(t, 10.0),
        format!(
            "max absolute error {worst:.2e} over 10 kernels x 50 lags, {:.1} s",
            t.as_secs_f64()
        ),
    )
}

fn analytic_evidence() -> Outcome {
    const SD: f64 = 0.1;
    let start = Instant::now();
    let one = SD * std::f64::consts::TAU.sqrt() * (norm_cdf(0.5 / SD) - norm_cdf(-0.5 / SD));
    let truth = 3.0 * one.ln();
    let ll = |x: &Vec<f64>| -0.5 * x.iter().map(|v| ((v - 0.5) / SD).powi(2)).sum::<f64>();
    let mut errs = Vec::new();
    let mut worst_sigma = 0.0f64;
    for seed in 0..10 {
        let cfg = NestedConfig {
            seed,
            n_live: 100,
            ..NestedConfig::default()
        };
        let post = run_nested(ll, &UnitCube(3), &cfg).unwrap();
        let err = (post.log_evidence - truth).abs();
        worst_sigma = worst_sigma.max(err / (post.information / 100.0).sqrt());
        errs.push(err);
    }
    let mean = errs.iter().sum::<f64>() / errs.len() as f64;
    let t = start.elapsed();
    outcome(
        mean < 0.5 && worst_sigma < 3.0 && within(t, 60.0),
        format!(
            "mean |log Z error| {mean:.3}, worst run {worst_sigma:.2} x sqrt(H/n), {:.1} s",
            t.as_secs_f64()
        ),
    )
}

/// Fraction of mass in the mode whose first component has the lower frequency.
fn ascending_fraction<'a>(draws: impl Iterator<Item = (&'a SmHyperParams, f64)>) -> f64 {
    let (mut asc, mut total) = (0.0, 0.0);
    for (p, w) in draws {
        if p.components[0].mean_freq[0] < p.components[1].mean_freq[0] {
            asc += w;
        }
        total += w;
    }
    asc / total
}

fn bimodality() -> Outcome {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::new(Task::Synthetic);
    cfg.synth.n_train = 100;
    cfg.synth.noise_sd = 0.1;
    let data = prepare_source(&Source::Synthetic, &cfg, 0).unwrap().train;
    let bounds = data.frequency_bounds().unwrap();

    let spec = PriorSpec::piecewise(2, &bounds).with_identifiability(false);
    let post = run_nested(
        |p: &SmHyperParams| log_marginal_likelihood(&data, p).unwrap_or(f64::NEG_INFINITY),
        &spec,
        &NestedConfig::default(),
    )
    .unwrap();
    let w = post.weights();
    let ns_asc = ascending_fraction(post.dead_points.iter().map(|d| &d.point).zip(w.iter().copied()));

    let spec = PriorSpec::all_lognormal(2, &bounds);
    let trace = hmc_run(&data, &spec, 2, &HmcConfig::default()).unwrap();
    let hmc_asc = ascending_fraction(trace.samples.iter().map(|s| (s, 1.0)));

    let t = start.elapsed();
    let ns_ok = (0.2..=0.8).contains(&ns_asc);
    let hmc_ok = hmc_asc >= 0.95 || hmc_asc <= 0.05;
    outcome(
        ns_ok && hmc_ok && within(t, 600.0),
        format!(
            "nested mode weights {ns_asc:.3}/{:.3}, HMC mode fractions {hmc_asc:.3}/{:.3}, {:.0} s",
            1.0 - ns_asc,
            1.0 - hmc_asc,
            t.as_secs_f64()
        ),
    )
}

fn rows_of(cfg: &ExperimentConfig) -> Vec<ResultRow> {
    run_experiment(cfg).unwrap().into_iter().map(|o| o.row).collect()
}

fn mean_of(rows: &[ResultRow], method: Method, f: impl Fn(&ResultRow) -> f64) -> f64 {
    let v: Vec<f64> = rows.iter().filter(|r| r.method == method).map(f).collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn sparse_regime() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for noise in [0.01, 0.1, 0.5] {
        let mut cfg = ExperimentConfig::new(Task::Synthetic);
        cfg.methods = vec![Method::Ml2, Method::Nested];
        cfg.seeds = (0..4).collect();
        cfg.synth.noise_sd = noise;
        let rows = rows_of(&cfg);
        let ok = rows.iter().all(|r| r.is_ok());
        let ml2 = mean_of(&rows, Method::Ml2, |r| r.nlpd);
        let ns = mean_of(&rows, Method::Nested, |r| r.nlpd);
        pass &= ok && ns < ml2;
        parts.push(format!("noise {noise}: NS {ns:.2} vs ML-II {ml2:.2}"));
    }
    let t = start.elapsed();
    outcome(
        pass && within(t, 1800.0),
        format!("mean NLPD {}, {:.0} s", parts.join("; "), t.as_secs_f64()),
    )
}

fn noise_underestimation() -> Outcome {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::new(Task::Synthetic);
    cfg.methods = vec![Method::Ml2];
    cfg.seeds = (0..20).collect();
    cfg.synth.noise_sd = 0.5;
    let rows = rows_of(&cfg);
    let below = rows.iter().filter(|r| r.is_ok() && r.noise_sd < 0.5).count();
    let t = start.elapsed();
    outcome(
        below * 10 >= 7 * rows.len() && within(t, 600.0),
        format!(
            "ML-II noise sd below 0.5 in {below}/{} runs, {:.0} s",
            rows.len(),
            t.as_secs_f64()
        ),
    )
}

fn series_paths() -> Vec<PathBuf> {
    let dir = std::env::var_os("MGPNS_SERIES_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/series"));
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", dir.display()))
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    paths
}

struct SeriesRun {
    /// Rows per dataset, keyed by method.
    by_dataset: BTreeMap<String, BTreeMap<Method, ResultRow>>,
    elapsed: Duration,
}

/// All benchmark series under every method, seed 0, sequential execution so
/// that timings are not shared between jobs.
fn series_run() -> &'static SeriesRun {
    static RUN: OnceLock<SeriesRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let mut cfg = ExperimentConfig::new(Task::Timeseries);
        cfg.data_paths = series_paths();
        cfg.execution = Execution::Sequential;
        let mut by_dataset: BTreeMap<String, BTreeMap<Method, ResultRow>> = BTreeMap::new();
        for row in rows_of(&cfg) {
            eprintln!(
                "  {:<14} {:<6} coverage {:.3} nlpd {:>9.3} {:>6.1} s{}",
                row.dataset,
                row.method,
                row.coverage95,
                row.nlpd,
                row.wall_seconds,
                row.error.as_deref().map(|e| format!(" error: {e}")).unwrap_or_default()
            );
            by_dataset
                .entry(row.dataset.clone())
                .or_default()
                .insert(row.method, row);
        }
        SeriesRun {
            by_dataset,
            elapsed: start.elapsed(),
        }
    })
}

/// Series on which both samplers cover at least as well as ML-II.
fn coverage_winners(run: &SeriesRun) -> Vec<&str> {
    run.by_dataset
        .iter()
        .filter(|(_, m)| {
            let cov = |k: Method| m.get(&k).filter(|r| r.is_ok()).map(|r| r.coverage95);
            match (cov(Method::Ml2), cov(Method::Hmc), cov(Method::Nested)) {
                (Some(ml2), Some(hmc), Some(ns)) => ns >= ml2 && hmc >= ml2,
                _ => false,
            }
        })
        .map(|(k, _)| k.as_str())
        .collect()
}

fn coverage_ordering() -> Outcome {
    let run = series_run();
    let winners = coverage_winners(run);
    outcome(
        winners.len() >= 3 && within(run.elapsed, 7200.0),
        format!(
            "NS >= ML-II and HMC >= ML-II on {}/{} series [{}], {:.0} s",
            winners.len(),
            run.by_dataset.len(),
            winners.join(", "),
            run.elapsed.as_secs_f64()
        ),
    )
}

fn timing_trend() -> Outcome {
    let run = series_run();
    let winners = coverage_winners(run);
    let ratios: Vec<(&str, f64)> = winners
        .iter()
        .map(|name| {
            let m = &run.by_dataset[*name];
            (*name, m[&Method::Hmc].wall_seconds / m[&Method::Nested].wall_seconds)
        })
        .collect();
    let slower = ratios.iter().filter(|(_, r)| *r >= 1.3).count();
    let all: Vec<String> = run
        .by_dataset
        .iter()
        .filter_map(|(k, m)| {
            let (h, n) = (m.get(&Method::Hmc)?, m.get(&Method::Nested)?);
            Some(format!("{k} {:.2}", h.wall_seconds / n.wall_seconds))
        })
        .collect();
    outcome(
        slower >= 3,
        format!(
            "HMC/NS time ratio >= 1.3 on {slower} of {} coverage series [{}]; all series: {}",
            ratios.len(),
            ratios
                .iter()
                .map(|(k, r)| format!("{k} {r:.2}"))
                .collect::<Vec<_>>()
                .join(", "),
            all.join(", ")
        ),
    )
}

fn pattern_trend() -> Outcome {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::new(Task::Pattern2d);
    cfg.q_components = 10;
    cfg.pattern.n_train = 50;
    let rows = rows_of(&cfg);
    let get = |m: Method| rows.iter().find(|r| r.method == m).map(|r| r.nlpd).unwrap_or(f64::NAN);
    let (ml2, hmc, ns) = (get(Method::Ml2), get(Method::Hmc), get(Method::Nested));
    let t = start.elapsed();
    let pass = ns < 10.0 && hmc < 10.0 && ml2 >= 3.0 * ns && ml2 >= 3.0 * hmc && within(t, 3600.0);
    outcome(
        pass,
        format!(
            "NLPD ML-II {ml2:.2}, HMC {hmc:.2}, NS {ns:.2}, {:.0} s",
            t.as_secs_f64()
        ),
    )
}

fn property<S: Strategy>(
    name: &str,
    strategy: S,
    check: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(PropConfig {
        cases: CASES,
        failure_persistence: None,
        ..PropConfig::default()
    });
    runner.run(&strategy, check).map_err(|e| format!("{name}: {e}"))
}

fn small_gaussian_run(
    dim: usize,
    n_live: usize,
    centre: f64,
    sd: f64,
    seed: u64,
) -> mgpns_core::nested::WeightedPosterior<Vec<f64>> {
    let cfg = NestedConfig {
        n_live,
        seed,
        execution: Execution::Sequential,
        ..NestedConfig::default()
    };
    let ll = move |x: &Vec<f64>| -0.5 * x.iter().map(|v| ((v - centre) / sd).powi(2)).sum::<f64>();
    run_nested(ll, &UnitCube(dim), &cfg).unwrap()
}

fn nested_case() -> impl Strategy<Value = (usize, usize, f64, f64, u64)> {
    (1usize..4, 5usize..30, 0.2..0.8f64, 0.05..0.5f64, any::<u64>())
}

fn mixture_case() -> impl Strategy<Value = (PredictiveMixture, Vec<f64>)> {
    (1usize..8, 1usize..5).prop_flat_map(|(m, n)| {
        (
            proptest::collection::vec(
                (
                    proptest::collection::vec(-3.0..3.0f64, n),
                    proptest::collection::vec(0.01..4.0f64, n),
                ),
                m,
            ),
            proptest::collection::vec(0.01..10.0f64, m),
            proptest::collection::vec(-5.0..5.0f64, n),
        )
            .prop_map(|(comps, w, y)| {
                let comps = comps
                    .into_iter()
                    .map(|(mean, variance)| GaussianPredictive { mean, variance })
                    .collect();
                (PredictiveMixture::new(comps, w).unwrap(), y)
            })
    })
}

fn property_suites() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut record = |r: Result<(), String>| {
        if let Err(e) = r {
            failures.push(e);
        }
    };

    record(property("nested weights", nested_case(), |(d, n, c, sd, seed)| {
        let post = small_gaussian_run(d, n, c, sd, seed);
        let total: f64 = post.weights().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-10, "weights sum to {total}");
        prop_assert!((post.recomputed_log_evidence() - post.log_evidence).abs() < 1e-9);
        Ok(())
    }));
    record(property("nested thresholds", nested_case(), |(d, n, c, sd, seed)| {
        let post = small_gaussian_run(d, n, c, sd, seed);
        prop_assert!(post.dead_points.windows(2).all(|p| p[0].log_like <= p[1].log_like));
        prop_assert!(post.trace.windows(2).all(|t| t[1].log_prior_mass < t[0].log_prior_mass));
        prop_assert!(post.trace.windows(2).all(|t| t[0].log_like <= t[1].log_like));
        Ok(())
    }));
    record(property(
        "resampling counts",
        (proptest::collection::vec(0.0..1.0f64, 1..50), 1usize..300, 0.0..1.0f64),
        |(mut w, m, u0)| {
            w[0] += 1e-3;
            let idx = systematic_indices(&w, m, u0);
            let total: f64 = w.iter().sum();
            prop_assert_eq!(idx.len(), m);
            for (i, wi) in w.iter().enumerate() {
                let count = idx.iter().filter(|&&j| j == i).count() as f64;
                prop_assert!((count - m as f64 * wi / total).abs() < 1.0 + 1e-9);
            }
            Ok(())
        },
    ));
    record(property("mixture weights", mixture_case(), |(mix, _)| {
        let total: f64 = mix.weights.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(mix.weights.iter().all(|w| *w >= 0.0));
        Ok(())
    }));
    record(property("nlpd jensen", mixture_case(), |(mix, y)| {
        let id = NormRecord::identity(1);
        for (i, &yi) in y.iter().enumerate() {
            let mixed = -mix.log_density(i, yi, &id);
            let averaged: f64 = mix
                .point(i)
                .iter()
                .map(|(m, v, w)| -w * normal_log_pdf(yi, *m, *v))
                .sum();
            prop_assert!(mixed <= averaged + 1e-10, "{mixed} > {averaged}");
        }
        Ok(())
    }));
    record(property(
        "prior round trip",
        (1usize..5, any::<bool>(), any::<u64>()),
        |(q, ordered, seed)| {
            let x = DMatrix::from_fn(30, 1, |i, _| i as f64 / 29.0);
            let bounds = mgpns_core::FrequencyBounds::from_inputs(&x).unwrap();
            let spec = PriorSpec::piecewise(q, &bounds).with_identifiability(ordered);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u: Vec<f64> = (0..spec.n_params()).map(|_| rng.random_range(0.01..0.99)).collect();
            let p = unit_cube_transform(&UnitCubePoint::new(u.clone()).unwrap(), &spec).unwrap();
            let back = cube_from_params(&p, &spec).unwrap();
            for (a, b) in u.iter().zip(back.coords()) {
                prop_assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            }
            Ok(())
        },
    ));
    record(property(
        "normalisation round trip",
        (proptest::collection::vec(-1e3..1e3f64, 2..40), -1e3..1e3f64),
        |(xs, y)| {
            let mut sorted = xs.clone();
            sorted.sort_by(f64::total_cmp);
            sorted.dedup();
            prop_assume!(sorted.len() >= 2 && sorted[sorted.len() - 1] - sorted[0] > 1e-6);
            let ys: Vec<f64> = sorted.iter().map(|v| v.sin()).collect();
            let data = Dataset::from_1d(&sorted, &ys).unwrap();
            let norm = mgpns_bench::data::fit_norm(&data).unwrap();
            let back = norm.denormalize_input(&norm.normalize_input(&[y]))[0];
            prop_assert!((back - y).abs() < 1e-9 * y.abs().max(1.0));
            let t = norm.denormalize_mean(norm.normalize_target(y));
            prop_assert!((t - y).abs() < 1e-9 * y.abs().max(1.0));
            Ok(())
        },
    ));
    record(property("nested determinism", nested_case(), |(d, n, c, sd, seed)| {
        prop_assert_eq!(
            small_gaussian_run(d, n, c, sd, seed),
            small_gaussian_run(d, n, c, sd, seed)
        );
        Ok(())
    }));
    record(property("hmc determinism", (1usize..4, any::<u64>()), |(d, seed)| {
        let cfg = HmcConfig {
            n_warmup: 10,
            n_samples: 10,
            path_length: 5,
            seed,
            ..HmcConfig::default()
        };
        let target = |z: &[f64]| {
            Some((
                -0.5 * z.iter().map(|v| v * v).sum::<f64>(),
                z.iter().map(|v| -v).collect(),
            ))
        };
        let a = sample(target, vec![0.5; d], &cfg).unwrap();
        let b = sample(target, vec![0.5; d], &cfg).unwrap();
        prop_assert_eq!(a, b);
        Ok(())
    }));
    record(property("ml2 and resampling determinism", any::<u64>(), |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..6).map(|i| i as f64 / 5.0).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| (5.0 * v).sin() + rng.random_range(-0.1..0.1))
            .collect();
        let data = Dataset::from_1d(&x, &y).unwrap();
        let cfg = Ml2Config {
            n_restarts: 2,
            max_iters: 20,
            seed,
            execution: Execution::Sequential,
            ..Ml2Config::default()
        };
        let f_nyq = data.frequency_bounds().unwrap().f_nyq;
        prop_assert_eq!(
            ml2_train(&data, 1, &f_nyq, &cfg).unwrap(),
            ml2_train(&data, 1, &f_nyq, &cfg).unwrap()
        );
        let post = small_gaussian_run(2, 10, 0.5, 0.2, seed);
        let draw = |s: u64| resample_equal(&post, 50, &mut ChaCha8Rng::seed_from_u64(s));
        prop_assert_eq!(draw(seed), draw(seed));
        Ok(())
    }));
    record(property(
        "quantile determinism",
        (mixture_case(), any::<u64>()),
        |((mix, _), seed)| {
            let id = NormRecord::identity(1);
            let q =
                |s: u64| mixture_quantiles(&mix, &[0.025, 0.975], 200, &id, &mut ChaCha8Rng::seed_from_u64(s)).unwrap();
            prop_assert_eq!(q(seed), q(seed));
            Ok(())
        },
    ));

    let t = start.elapsed();
    let n_suites = 11;
    let detail = if failures.is_empty() {
        format!("{n_suites} suites x {CASES} cases, {:.0} s", t.as_secs_f64())
    } else {
        format!(
            "{} of {n_suites} suites failed: {}",
            failures.len(),
            failures.join("; ")
        )
    };
    outcome(failures.is_empty() && within(t, 300.0), detail)
}

type Criterion = (usize, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 10] = [
    (1, "gradient oracle", gradient_oracle),
    (2, "Bochner consistency", bochner_consistency),
    (3, "analytic evidence", analytic_evidence),
    (4, "bimodality", bimodality),
    (5, "sparse-regime NLPD", sparse_regime),
    (6, "noise underestimation", noise_underestimation),
    (7, "coverage ordering", coverage_ordering),
    (8, "timing trend", timing_trend),
    (9, "2-D pattern", pattern_trend),
    (10, "property suites", property_suites),
];

fn main() {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    // `cargo test -- --list` and similar flags expect no work.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, check) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        ran += 1;
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {} {name}: {}",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
