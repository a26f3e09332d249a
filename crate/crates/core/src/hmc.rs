//! Hamiltonian Monte Carlo on the log-hyperparameter space with a jittered
//! fixed path length and dual-averaging step-size adaptation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gp::lml_and_gradient;
use crate::kernel::SmHyperParams;
use crate::ml2;
use crate::priors::{log_prior_unconstrained, PriorSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct HmcConfig {
    pub n_warmup: usize,
    pub n_samples: usize,
    pub target_accept: f64,
    /// Nominal number of leapfrog steps per proposal.
    pub path_length: usize,
    /// Path length is drawn uniformly from `L(1 -+ path_jitter)`.
    pub path_jitter: f64,
    /// Each proposal scales the step size by a uniform factor in
    /// `1 -+ step_jitter`, which breaks periodic trajectories.
    pub step_jitter: f64,
    /// Energy error beyond which a proposal counts as divergent.
    pub max_energy_error: f64,
    pub seed: u64,
}

impl Default for HmcConfig {
    fn default() -> Self {
        Self {
            n_warmup: 500,
            n_samples: 500,
            target_accept: 0.8,
            path_length: 20,
            path_jitter: 0.2,
            step_jitter: 0.1,
            max_energy_error: 1000.0,
            seed: 0,
        }
    }
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.path_length == 0 {
            return Err(Error::InvalidConfig(
                "n_samples and path_length must be positive".into(),
            ));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::InvalidConfig("target_accept must lie in (0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.path_jitter) {
            return Err(Error::InvalidConfig("path_jitter must lie in [0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.step_jitter) {
            return Err(Error::InvalidConfig("step_jitter must lie in [0, 1)".into()));
        }
        Ok(())
    }

    fn path_bounds(&self) -> (usize, usize) {
        let l = self.path_length as f64;
        let lo = (l * (1.0 - self.path_jitter)).round().max(1.0) as usize;
        let hi = (l * (1.0 + self.path_jitter)).round().max(lo as f64) as usize;
        (lo, hi)
    }
}

/// Position with its cached log density and gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub position: Vec<f64>,
    pub log_density: f64,
    pub gradient: Vec<f64>,
}

impl State {
    pub fn at<F>(position: Vec<f64>, target: &F) -> Option<Self>
    where
        F: Fn(&[f64]) -> Option<(f64, Vec<f64>)>,
    {
        let (log_density, gradient) = target(&position)?;
        finite(log_density, &gradient).then_some(Self {
            position,
            log_density,
            gradient,
        })
    }
}

fn finite(v: f64, g: &[f64]) -> bool {
    v.is_finite() && g.iter().all(|x| x.is_finite())
}

/// Half-kick, drift, half-kick leapfrog on `grad` (gradient of the log
/// density) with unit mass matrix.
pub fn leapfrog<G>(z: &[f64], p: &[f64], eps: f64, n_steps: usize, grad: G) -> (Vec<f64>, Vec<f64>)
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    let start = State {
        position: z.to_vec(),
        log_density: 0.0,
        gradient: grad(z),
    };
    let target = |x: &[f64]| Some((0.0, grad(x)));
    match integrate(&start, p, eps, n_steps, &target) {
        Some((s, p)) => (s.position, p),
        None => (vec![f64::NAN; z.len()], vec![f64::NAN; p.len()]),
    }
}

/// Leapfrog reusing the cached gradient; `None` if the density becomes
/// non-finite along the path.
fn integrate<F>(start: &State, p0: &[f64], eps: f64, n_steps: usize, target: &F) -> Option<(State, Vec<f64>)>
where
    F: Fn(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let mut z = start.position.clone();
    let mut p = p0.to_vec();
    let mut grad = start.gradient.clone();
    let mut logp = start.log_density;
    for _ in 0..n_steps {
        for (pi, g) in p.iter_mut().zip(&grad) {
            *pi += 0.5 * eps * g;
        }
        for (zi, pi) in z.iter_mut().zip(&p) {
            *zi += eps * pi;
        }
        let (lp, g) = target(&z)?;
        if !finite(lp, &g) {
            return None;
        }
        logp = lp;
        grad = g;
        for (pi, g) in p.iter_mut().zip(&grad) {
            *pi += 0.5 * eps * g;
        }
    }
    Some((
        State {
            position: z,
            log_density: logp,
            gradient: grad,
        },
        p,
    ))
}

fn kinetic(p: &[f64]) -> f64 {
    0.5 * p.iter().map(|x| x * x).sum::<f64>()
}

/// Dual-averaging step-size controller.
#[derive(Debug, Clone)]
struct DualAveraging {
    mu: f64,
    h_bar: f64,
    log_eps: f64,
    log_eps_bar: f64,
    iter: usize,
    target: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    fn new(eps0: f64, target: f64) -> Self {
        Self {
            mu: (10.0 * eps0).ln(),
            h_bar: 0.0,
            log_eps: eps0.ln(),
            log_eps_bar: 0.0,
            iter: 0,
            target,
        }
    }

    fn update(&mut self, accept_stat: f64) {
        self.iter += 1;
        let m = self.iter as f64;
        let w = 1.0 / (m + Self::T0);
        self.h_bar = (1.0 - w) * self.h_bar + w * (self.target - accept_stat);
        self.log_eps = self.mu - m.sqrt() / Self::GAMMA * self.h_bar;
        let eta = m.powf(-Self::KAPPA);
        self.log_eps_bar = eta * self.log_eps + (1.0 - eta) * self.log_eps_bar;
    }

    fn current(&self) -> f64 {
        self.log_eps.exp()
    }

    fn final_step(&self) -> f64 {
        if self.iter == 0 {
            self.current()
        } else {
            self.log_eps_bar.exp()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HmcTraceRow {
    pub iteration: usize,
    pub log_density: f64,
    pub step_size: f64,
    pub accept_stat: f64,
    pub warmup: bool,
}

/// Output of a single chain over a generic target.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    /// Post-warmup positions.
    pub positions: Vec<Vec<f64>>,
    pub log_density: Vec<f64>,
    /// Mean Metropolis acceptance probability after warmup.
    pub accept_rate: f64,
    /// Divergent proposals after warmup.
    pub divergence_count: usize,
    pub warmup_divergences: usize,
    pub step_size: f64,
    pub trace: Vec<HmcTraceRow>,
}

struct Transition {
    accept_stat: f64,
    divergent: bool,
}

fn transition<F, R>(state: &mut State, eps: f64, steps: usize, max_err: f64, target: &F, rng: &mut R) -> Transition
where
    F: Fn(&[f64]) -> Option<(f64, Vec<f64>)>,
    R: Rng,
{
    let p0: Vec<f64> = (0..state.position.len()).map(|_| rng.sample(StandardNormal)).collect();
    let h0 = -state.log_density + kinetic(&p0);
    let u: f64 = rng.random();
    match integrate(state, &p0, eps, steps, target) {
        Some((next, p1)) => {
            let h1 = -next.log_density + kinetic(&p1);
            let err = h1 - h0;
            if !err.is_finite() || err > max_err {
                return Transition {
                    accept_stat: 0.0,
                    divergent: true,
                };
            }
            let a = (-err).exp().min(1.0);
            if u < a {
                *state = next;
            }
            Transition {
                accept_stat: a,
                divergent: false,
            }
        }
        None => Transition {
            accept_stat: 0.0,
            divergent: true,
        },
    }
}

/// Heuristic initial step size: adjust by factors of two until a single
/// leapfrog step has acceptance probability near one half.
fn initial_step_size<F, R>(state: &State, target: &F, rng: &mut R) -> f64
where
    F: Fn(&[f64]) -> Option<(f64, Vec<f64>)>,
    R: Rng,
{
    let p0: Vec<f64> = (0..state.position.len()).map(|_| rng.sample(StandardNormal)).collect();
    let h0 = -state.log_density + kinetic(&p0);
    let log_accept = |eps: f64| match integrate(state, &p0, eps, 1, target) {
        Some((s, p)) => {
            let v = h0 - (-s.log_density + kinetic(&p));
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        }
        None => f64::NEG_INFINITY,
    };
    let mut eps: f64 = 0.1;
    let up = log_accept(eps) > 0.5f64.ln();
    for _ in 0..50 {
        let la = log_accept(eps);
        if up && la <= 0.5f64.ln() {
            return eps / 2.0;
        }
        if !up && la > 0.5f64.ln() {
            return eps;
        }
        eps = if up { eps * 2.0 } else { eps / 2.0 };
    }
    eps
}

/// One HMC chain over `target`, which returns the log density and its
/// gradient or `None` where the density cannot be evaluated.
pub fn sample<F>(target: F, init: Vec<f64>, cfg: &HmcConfig) -> Result<Chain>
where
    F: Fn(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state =
        State::at(init, &target).ok_or_else(|| Error::Domain("initial HMC position has non-finite density".into()))?;
    let mut adapt = DualAveraging::new(initial_step_size(&state, &target, &mut rng), cfg.target_accept);
    let (lo, hi) = cfg.path_bounds();
    let jittered = |eps: f64, rng: &mut ChaCha8Rng| eps * (1.0 + cfg.step_jitter * rng.random_range(-1.0..=1.0));

    let mut trace = Vec::with_capacity(cfg.n_warmup + cfg.n_samples);
    let mut warmup_divergences = 0;
    for it in 0..cfg.n_warmup {
        let eps = adapt.current();
        let steps = rng.random_range(lo..=hi);
        let t = transition(
            &mut state,
            jittered(eps, &mut rng),
            steps,
            cfg.max_energy_error,
            &target,
            &mut rng,
        );
        warmup_divergences += t.divergent as usize;
        adapt.update(t.accept_stat);
        trace.push(HmcTraceRow {
            iteration: it,
            log_density: state.log_density,
            step_size: eps,
            accept_stat: t.accept_stat,
            warmup: true,
        });
    }

    let eps = adapt.final_step();
    let mut positions = Vec::with_capacity(cfg.n_samples);
    let mut log_density = Vec::with_capacity(cfg.n_samples);
    let mut accept_sum = 0.0;
    let mut divergence_count = 0;
    for it in 0..cfg.n_samples {
        let steps = rng.random_range(lo..=hi);
        let t = transition(
            &mut state,
            jittered(eps, &mut rng),
            steps,
            cfg.max_energy_error,
            &target,
            &mut rng,
        );
        accept_sum += t.accept_stat;
        divergence_count += t.divergent as usize;
        positions.push(state.position.clone());
        log_density.push(state.log_density);
        trace.push(HmcTraceRow {
            iteration: cfg.n_warmup + it,
            log_density: state.log_density,
            step_size: eps,
            accept_stat: t.accept_stat,
            warmup: false,
        });
    }

    Ok(Chain {
        positions,
        log_density,
        accept_rate: accept_sum / cfg.n_samples as f64,
        divergence_count,
        warmup_divergences,
        step_size: eps,
        trace,
    })
}

/// HMC draws of spectral mixture hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct HmcTrace {
    pub samples: Vec<SmHyperParams>,
    pub log_posterior: Vec<f64>,
    pub accept_rate: f64,
    pub divergence_count: usize,
    pub step_size: f64,
    pub rows: Vec<HmcTraceRow>,
}

impl HmcTrace {
    /// Writes `iteration,log_posterior,step_size,accept_stat,warmup` rows.
    pub fn write_trace<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,log_posterior,step_size,accept_stat,warmup")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.iteration, r.log_density, r.step_size, r.accept_stat, r.warmup as u8
            )?;
        }
        Ok(())
    }
}

/// Unnormalised log posterior over log hyperparameters and its gradient.
pub fn log_posterior(data: &Dataset, spec: &PriorSpec, z: &[f64]) -> Option<(f64, Vec<f64>)> {
    let (lp, mut grad) = log_prior_unconstrained(z, spec);
    if !lp.is_finite() {
        return None;
    }
    let params = SmHyperParams::from_log_vec(z, spec.q_components, spec.dims);
    let (ll, g) = lml_and_gradient(data, &params).ok()?;
    for (a, b) in grad.iter_mut().zip(g) {
        *a += b;
    }
    Some((ll + lp, grad))
}

const MAX_INIT_ATTEMPTS: usize = 100;

/// Samples the hyperparameter posterior, starting from the data-driven
/// ML-II initialisation.
pub fn hmc_run(data: &Dataset, spec: &PriorSpec, q: usize, cfg: &HmcConfig) -> Result<HmcTrace> {
    if spec.q_components != q {
        return Err(Error::InvalidConfig(format!(
            "prior has Q={} but Q={q} requested",
            spec.q_components
        )));
    }
    spec.validate()?;
    let target = |z: &[f64]| log_posterior(data, spec, z);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut init = None;
    for _ in 0..MAX_INIT_ATTEMPTS {
        let mut p = ml2::initialize(data, q, &spec.f_nyq, &mut rng)?;
        if spec.identifiability {
            p.components.sort_by(|a, b| a.mean_freq[0].total_cmp(&b.mean_freq[0]));
        }
        let z = p.to_log_vec();
        if target(&z).is_some() {
            init = Some(z);
            break;
        }
    }
    let init = init.ok_or_else(|| Error::Domain("no finite starting point for HMC".into()))?;
    let chain = sample(target, init, cfg)?;
    Ok(HmcTrace {
        samples: chain
            .positions
            .iter()
            .map(|z| SmHyperParams::from_log_vec(z, q, spec.dims))
            .collect(),
        log_posterior: chain.log_density,
        accept_rate: chain.accept_rate,
        divergence_count: chain.divergence_count,
        step_size: chain.step_size,
        rows: chain.trace,
    })
}

/// Independent chains with seeds `cfg.seed + c`.
pub fn hmc_run_chains(
    data: &Dataset,
    spec: &PriorSpec,
    q: usize,
    cfg: &HmcConfig,
    chains: usize,
    execution: Execution,
) -> Result<Vec<HmcTrace>> {
    execution
        .map_range(chains, |c| {
            let cc = HmcConfig {
                seed: cfg.seed.wrapping_add(c as u64),
                ..cfg.clone()
            };
            hmc_run(data, spec, q, &cc)
        })
        .into_iter()
        .collect()
}
