//! Type-II maximum likelihood: data-driven initialisation and Adam ascent of
//! the log marginal likelihood in log-hyperparameter space, with restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gp::lml_and_gradient;
use crate::kernel::{SmHyperParams, SpectralComponent};
use crate::stats::population_std;

#[derive(Debug, Clone, PartialEq)]
pub struct Ml2Config {
    pub n_restarts: usize,
    pub max_iters: usize,
    pub learning_rate: f64,
    /// Stop a restart once the gradient norm drops below this.
    pub grad_tol: f64,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for Ml2Config {
    fn default() -> Self {
        Self {
            n_restarts: 5,
            max_iters: 2000,
            learning_rate: 0.05,
            grad_tol: 1e-6,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

impl Ml2Config {
    pub fn validate(&self) -> Result<()> {
        if self.n_restarts == 0 || self.max_iters == 0 {
            return Err(Error::InvalidConfig("restarts and iterations must be positive".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Initial hyperparameters tied to the training data:
/// weights `std(y) / Q`, bandwidths `|N(0, max_dist^2)|`, frequencies
/// `Unif(0, f_nyq)` per dimension and noise variance `0.1 var(y)`.
pub fn initialize<R: Rng>(data: &Dataset, q: usize, f_nyq: &[f64], rng: &mut R) -> Result<SmHyperParams> {
    if data.len() < 2 {
        return Err(Error::DegenerateData("initialisation needs at least two points".into()));
    }
    if q == 0 {
        return Err(Error::InvalidConfig("Q must be positive".into()));
    }
    if f_nyq.len() != data.dims() {
        return Err(Error::Shape(
            "one Nyquist frequency per input dimension required".into(),
        ));
    }
    let max_dist = data.max_pairwise_distance();
    if !(max_dist > 0.0) {
        return Err(Error::DegenerateData("all inputs coincide".into()));
    }
    let y: Vec<f64> = data.targets.iter().copied().collect();
    let sd = population_std(&y);
    if !(sd > 0.0) {
        return Err(Error::DegenerateData("targets are constant".into()));
    }
    let d = data.dims();
    let components = (0..q)
        .map(|_| {
            let mean_freq = f_nyq.iter().map(|&f| positive(|| rng.random::<f64>() * f)).collect();
            let bandwidth = (0..d)
                .map(|_| positive(|| (max_dist * rng.sample::<f64, _>(StandardNormal)).abs()))
                .collect();
            SpectralComponent::new(sd / q as f64, mean_freq, bandwidth)
        })
        .collect();
    SmHyperParams::new(components, 0.1 * sd * sd)
}

fn positive(mut draw: impl FnMut() -> f64) -> f64 {
    loop {
        let v = draw();
        if v > 0.0 {
            return v;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartOutcome {
    pub initial_lml: f64,
    /// Best parameters and value found, or the reason the restart was dropped.
    pub best: Result<(SmHyperParams, f64)>,
    /// Best-so-far log marginal likelihood after each iteration.
    pub history: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ml2Fit {
    pub params: SmHyperParams,
    pub lml: f64,
    pub restarts: Vec<RestartOutcome>,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Adam ascent from `init`, tracking the best iterate.
pub fn ascend(data: &Dataset, init: &SmHyperParams, cfg: &Ml2Config) -> RestartOutcome {
    let (q, d) = (init.q(), init.dims());
    let mut z = init.to_log_vec();
    let mut m = vec![0.0; z.len()];
    let mut v = vec![0.0; z.len()];
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut history = Vec::new();
    let mut initial_lml = f64::NAN;
    let mut iterations = 0;

    for t in 1..=cfg.max_iters {
        let params = SmHyperParams::from_log_vec(&z, q, d);
        let (lml, grad) = match lml_and_gradient(data, &params) {
            Ok(r) if r.0.is_finite() && r.1.iter().all(|g| g.is_finite()) => r,
            Ok(_) => {
                return abandoned(
                    initial_lml,
                    history,
                    iterations,
                    Error::FactorizationFailure { jitter: 0.0 },
                )
            }
            Err(e) => return abandoned(initial_lml, history, iterations, e),
        };
        iterations = t;
        if t == 1 {
            initial_lml = lml;
        }
        if best.as_ref().is_none_or(|(_, b)| lml > *b) {
            best = Some((z.clone(), lml));
        }
        history.push(best.as_ref().map(|b| b.1).unwrap_or(lml));

        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < cfg.grad_tol || t == cfg.max_iters {
            break;
        }
        let (c1, c2) = (1.0 - BETA1.powi(t as i32), 1.0 - BETA2.powi(t as i32));
        for k in 0..z.len() {
            m[k] = BETA1 * m[k] + (1.0 - BETA1) * grad[k];
            v[k] = BETA2 * v[k] + (1.0 - BETA2) * grad[k] * grad[k];
            z[k] += cfg.learning_rate * (m[k] / c1) / ((v[k] / c2).sqrt() + ADAM_EPS);
        }
    }
    let (bz, blml) = best.expect("at least one iteration ran");
    RestartOutcome {
        initial_lml,
        best: Ok((SmHyperParams::from_log_vec(&bz, q, d), blml)),
        history,
        iterations,
    }
}

fn abandoned(initial_lml: f64, history: Vec<f64>, iterations: usize, e: Error) -> RestartOutcome {
    RestartOutcome {
        initial_lml,
        best: Err(e),
        history,
        iterations,
    }
}

/// Best of `n_restarts` independent ascents, with restart details.
pub fn ml2_train_detailed(data: &Dataset, q: usize, f_nyq: &[f64], cfg: &Ml2Config) -> Result<Ml2Fit> {
    cfg.validate()?;
    let restarts: Vec<Result<RestartOutcome>> = cfg.execution.map_range(cfg.n_restarts, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(r as u64);
        let init = initialize(data, q, f_nyq, &mut rng)?;
        Ok(ascend(data, &init, cfg))
    });
    let restarts: Vec<RestartOutcome> = restarts.into_iter().collect::<Result<_>>()?;
    let best = restarts
        .iter()
        .filter_map(|r| r.best.as_ref().ok())
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .cloned();
    match best {
        Some((params, lml)) => Ok(Ml2Fit { params, lml, restarts }),
        None => Err(Error::AllRestartsFailed),
    }
}

/// ML-II point estimate and its log marginal likelihood.
pub fn ml2_train(data: &Dataset, q: usize, f_nyq: &[f64], cfg: &Ml2Config) -> Result<(SmHyperParams, f64)> {
    ml2_train_detailed(data, q, f_nyq, cfg).map(|f| (f.params, f.lml))
}
