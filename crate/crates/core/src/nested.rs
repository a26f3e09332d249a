//! Nested sampling over the unit hypercube with likelihood-constrained
//! random-direction slice sampling.
//!
//! Prior mass shrinks on the deterministic schedule `X_i = exp(-i / n_live)`.
//! All evidence arithmetic is in log space.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernel::SmHyperParams;
use crate::priors::{transform_unchecked, PriorSpec};
use crate::stats::{log_add_exp, log_sum_exp};

/// Maps unit-cube coordinates to whatever the likelihood consumes.
pub trait PriorTransform: Sync {
    type Point: Clone + Send + Sync;
    fn dim(&self) -> usize;
    fn transform(&self, cube: &[f64]) -> Self::Point;
}

impl PriorTransform for PriorSpec {
    type Point = SmHyperParams;

    fn dim(&self) -> usize {
        self.n_params()
    }

    fn transform(&self, cube: &[f64]) -> SmHyperParams {
        transform_unchecked(cube, self)
    }
}

/// Uniform prior on `[0, 1]^dim`; points are the cube coordinates themselves.
#[derive(Debug, Clone, Copy)]
pub struct UnitCube(pub usize);

impl PriorTransform for UnitCube {
    type Point = Vec<f64>;

    fn dim(&self) -> usize {
        self.0
    }

    fn transform(&self, cube: &[f64]) -> Vec<f64> {
        cube.to_vec()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LivePoint<P> {
    pub cube: Vec<f64>,
    pub point: P,
    pub log_like: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeadPoint<P> {
    pub point: P,
    pub log_like: f64,
    /// Log of the prior-mass slab `V_i` assigned to this point.
    pub log_volume: f64,
    /// Normalised log importance weight, `log(psi_i V_i / Z)`.
    pub log_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub log_prior_mass: f64,
    pub log_like: f64,
    pub log_evidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPosterior<P> {
    /// Removed points followed by the final live set, log-likelihood ascending.
    pub dead_points: Vec<DeadPoint<P>>,
    pub log_evidence: f64,
    /// Kullback-Leibler divergence from prior to posterior (nats).
    pub information: f64,
    pub n_live: usize,
    pub n_iterations: usize,
    pub n_likelihood_calls: usize,
    /// True when the run ended because no replacement could be found.
    pub exhausted: bool,
    pub trace: Vec<TraceRow>,
}

impl<P> WeightedPosterior<P> {
    pub fn weights(&self) -> Vec<f64> {
        self.dead_points.iter().map(|d| d.log_weight.exp()).collect()
    }

    /// Evidence rebuilt from scratch as `logsumexp(log psi_i + log V_i)`.
    pub fn recomputed_log_evidence(&self) -> f64 {
        let terms: Vec<f64> = self.dead_points.iter().map(|d| d.log_like + d.log_volume).collect();
        log_sum_exp(&terms)
    }

    /// Writes `iteration,log_X,log_psi,log_Z` rows.
    pub fn write_trace<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,log_X,log_psi,log_Z")?;
        for r in &self.trace {
            writeln!(
                out,
                "{},{},{},{}",
                r.iteration, r.log_prior_mass, r.log_like, r.log_evidence
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NestedConfig {
    pub n_live: usize,
    /// Stop once the live set can hold at most this fraction of the evidence.
    pub stop_frac: f64,
    pub n_slices: usize,
    /// Upper bound on interval shrinks within one replacement.
    pub max_shrinks: usize,
    pub max_iterations: usize,
    pub seed: u64,
    /// Scheduling of the initial live-point evaluations.
    pub execution: Execution,
}

impl Default for NestedConfig {
    fn default() -> Self {
        Self {
            n_live: 100,
            stop_frac: 0.01,
            n_slices: 5,
            max_shrinks: 1_000_000,
            max_iterations: 1_000_000,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

impl NestedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_live < 2 {
            return Err(Error::InvalidConfig("n_live must be at least 2".into()));
        }
        if !(self.stop_frac > 0.0 && self.stop_frac < 1.0) {
            return Err(Error::InvalidConfig("stop_frac must lie in (0, 1)".into()));
        }
        if self.n_slices == 0 {
            return Err(Error::InvalidConfig("n_slices must be positive".into()));
        }
        Ok(())
    }
}

/// Folds `x` back into [0, 1] by reflection at the faces.
fn reflect(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    if r > 1.0 {
        2.0 - r
    } else {
        r
    }
}

/// Runs `n_slices` rounds of random-direction slice sampling restricted to
/// `loglike > threshold`, each with a unit-width interval placed at a random
/// offset around the current point and shrunk on rejection.
pub fn constrained_slice_step<T, F, R>(
    start: &LivePoint<T::Point>,
    prior: &T,
    loglike: &F,
    threshold: f64,
    n_slices: usize,
    rng: &mut R,
) -> Result<(LivePoint<T::Point>, usize)>
where
    T: PriorTransform,
    F: Fn(&T::Point) -> f64,
    R: Rng,
{
    constrained_slice_step_bounded(start, prior, loglike, threshold, n_slices, 1_000_000, rng)
}

fn constrained_slice_step_bounded<T, F, R>(
    start: &LivePoint<T::Point>,
    prior: &T,
    loglike: &F,
    threshold: f64,
    n_slices: usize,
    max_shrinks: usize,
    rng: &mut R,
) -> Result<(LivePoint<T::Point>, usize)>
where
    T: PriorTransform,
    F: Fn(&T::Point) -> f64,
    R: Rng,
{
    let dim = prior.dim();
    let mut current = start.clone();
    let mut shrinks = 0usize;
    let mut calls = 0usize;
    let mut dir = vec![0.0; dim];
    let mut proposal = vec![0.0; dim];
    for _ in 0..n_slices {
        let mut norm = 0.0f64;
        for v in dir.iter_mut() {
            *v = rng.sample(StandardNormal);
            norm += *v * *v;
        }
        let norm = norm.sqrt();
        dir.iter_mut().for_each(|v| *v /= norm);

        let offset: f64 = rng.random();
        let (mut lo, mut hi) = (-offset, 1.0 - offset);
        loop {
            let t = lo + (hi - lo) * rng.random::<f64>();
            for k in 0..dim {
                proposal[k] = reflect(current.cube[k] + t * dir[k]);
            }
            let point = prior.transform(&proposal);
            let ll = loglike(&point);
            calls += 1;
            if ll > threshold {
                current = LivePoint {
                    cube: proposal.clone(),
                    point,
                    log_like: ll,
                };
                break;
            }
            if t < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            shrinks += 1;
            if shrinks >= max_shrinks || hi - lo < 1e-14 {
                return Err(Error::PriorExhausted { shrinks });
            }
        }
    }
    Ok((current, calls))
}

/// Nested sampling with live-point replacement by constrained slice sampling.
///
/// `loglike` returns `-inf` for hyperparameters it cannot evaluate.
pub fn run_nested<T, F>(loglike: F, prior: &T, cfg: &NestedConfig) -> Result<WeightedPosterior<T::Point>>
where
    T: PriorTransform,
    F: Fn(&T::Point) -> f64 + Sync,
{
    cfg.validate()?;
    let n = cfg.n_live;
    let dim = prior.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let cubes: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect();
    let mut live: Vec<LivePoint<T::Point>> = cfg.execution.map_slice(&cubes, |c| {
        let point = prior.transform(c);
        let log_like = loglike(&point);
        LivePoint {
            cube: c.clone(),
            point,
            log_like,
        }
    });
    let mut calls = n;

    let log_shell = (1.0 / n as f64).exp_m1().ln();
    let log_stop = cfg.stop_frac.ln();
    let mut log_z = f64::NEG_INFINITY;
    let mut saved: Vec<(T::Point, f64, f64)> = Vec::new();
    let mut trace = Vec::new();
    let mut exhausted = false;
    let mut iteration = 0usize;

    while iteration < cfg.max_iterations {
        let worst = live
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.log_like.total_cmp(&b.1.log_like))
            .map(|(i, _)| i)
            .expect("live set is non-empty");
        let threshold = live[worst].log_like;

        let candidates: Vec<usize> = (0..n).filter(|&j| j != worst && live[j].log_like > threshold).collect();
        let Some(&start) = candidates.choose(&mut rng) else {
            exhausted = true;
            break;
        };
        let replacement = match constrained_slice_step_bounded(
            &live[start],
            prior,
            &loglike,
            threshold,
            cfg.n_slices,
            cfg.max_shrinks,
            &mut rng,
        ) {
            Ok((p, c)) => {
                calls += c;
                p
            }
            Err(Error::PriorExhausted { .. }) => {
                exhausted = true;
                break;
            }
            Err(e) => return Err(e),
        };

        iteration += 1;
        let removed = std::mem::replace(&mut live[worst], replacement);
        let log_x = -(iteration as f64) / n as f64;
        // V_i = X_{i-1} - X_i = X_i (e^{1/n} - 1)
        let log_v = log_x + log_shell;
        log_z = log_add_exp(log_z, removed.log_like + log_v);
        trace.push(TraceRow {
            iteration,
            log_prior_mass: log_x,
            log_like: removed.log_like,
            log_evidence: log_z,
        });
        saved.push((removed.point, removed.log_like, log_v));

        let max_live = live.iter().map(|p| p.log_like).fold(f64::NEG_INFINITY, f64::max);
        if max_live + log_x - log_z < log_stop {
            break;
        }
    }

    // Final slab: each surviving live point carries X_K / n_live.
    let log_x_final = -(iteration as f64) / n as f64;
    let log_v_live = log_x_final - (n as f64).ln();
    live.sort_by(|a, b| a.log_like.total_cmp(&b.log_like));
    for p in live {
        log_z = log_add_exp(log_z, p.log_like + log_v_live);
        saved.push((p.point, p.log_like, log_v_live));
    }

    let mut information = 0.0;
    let dead_points: Vec<DeadPoint<T::Point>> = saved
        .into_iter()
        .map(|(point, log_like, log_volume)| {
            let log_weight = log_like + log_volume - log_z;
            let w = log_weight.exp();
            if w > 0.0 {
                information += w * (log_like - log_z);
            }
            DeadPoint {
                point,
                log_like,
                log_volume,
                log_weight,
            }
        })
        .collect();

    Ok(WeightedPosterior {
        dead_points,
        log_evidence: log_z,
        information,
        n_live: n,
        n_iterations: iteration,
        n_likelihood_calls: calls,
        exhausted,
        trace,
    })
}

/// Independent runs with seeds `cfg.seed + r`, scheduled by `execution`.
pub fn run_nested_multi<T, F>(
    loglike: F,
    prior: &T,
    cfg: &NestedConfig,
    runs: usize,
    execution: Execution,
) -> Result<Vec<WeightedPosterior<T::Point>>>
where
    T: PriorTransform,
    F: Fn(&T::Point) -> f64 + Sync,
{
    execution
        .map_range(runs, |r| {
            let c = NestedConfig {
                seed: cfg.seed.wrapping_add(r as u64),
                execution: Execution::Sequential,
                ..cfg.clone()
            };
            run_nested(&loglike, prior, &c)
        })
        .into_iter()
        .collect()
}

/// Pools independent runs, giving each run equal total weight. The pooled
/// evidence is the mean of the per-run evidences.
pub fn merge_runs<P: Clone>(runs: &[WeightedPosterior<P>]) -> Option<WeightedPosterior<P>> {
    let first = runs.first()?;
    let r = runs.len() as f64;
    let log_r = r.ln();
    let log_z = log_sum_exp(&runs.iter().map(|p| p.log_evidence).collect::<Vec<_>>()) - log_r;
    let mut dead: Vec<DeadPoint<P>> = runs
        .iter()
        .flat_map(|p| {
            p.dead_points.iter().map(|d| DeadPoint {
                log_weight: d.log_weight - log_r,
                log_volume: d.log_volume - log_r,
                ..d.clone()
            })
        })
        .collect();
    dead.sort_by(|a, b| a.log_like.total_cmp(&b.log_like));
    let information = dead
        .iter()
        .map(|d| d.log_weight.exp() * (d.log_like - log_z))
        .filter(|v| v.is_finite())
        .sum();
    Some(WeightedPosterior {
        dead_points: dead,
        log_evidence: log_z,
        information,
        n_live: first.n_live,
        n_iterations: runs.iter().map(|p| p.n_iterations).sum(),
        n_likelihood_calls: runs.iter().map(|p| p.n_likelihood_calls).sum(),
        exhausted: runs.iter().any(|p| p.exhausted),
        trace: Vec::new(),
    })
}

/// Systematic resampling of `m` equally weighted draws.
pub fn resample_equal<P: Clone, R: Rng>(post: &WeightedPosterior<P>, m: usize, rng: &mut R) -> Vec<P> {
    let weights = post.weights();
    let indices = systematic_indices(&weights, m, rng.random::<f64>());
    indices.into_iter().map(|i| post.dead_points[i].point.clone()).collect()
}

/// Indices selected by systematic resampling with offset `u0` in [0, 1).
pub fn systematic_indices(weights: &[f64], m: usize, u0: f64) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let mut out = Vec::with_capacity(m);
    let mut cum = 0.0;
    let mut i = 0;
    for k in 0..m {
        let pos = (u0 + k as f64) / m as f64 * total;
        while i + 1 < weights.len() && cum + weights[i] <= pos {
            cum += weights[i];
            i += 1;
        }
        out.push(i);
    }
    out
}
