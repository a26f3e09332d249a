//! Runs (dataset, seed, method) jobs and evaluates their predictive
//! mixtures on held-out data.

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mgpns_core::gp::log_marginal_likelihood;
use mgpns_core::hmc::{hmc_run, HmcConfig};
use mgpns_core::ml2::{ml2_train_detailed, Ml2Config};
use mgpns_core::nested::{resample_equal, run_nested, NestedConfig};
use mgpns_core::predict::{coverage, mixture_predict_with, mixture_quantiles_with, nlpd, PredictiveMixture};
use mgpns_core::priors::PriorSpec;
use mgpns_core::{Execution, NormRecord, SmHyperParams};

use crate::config::{ExperimentConfig, Method, Task};
use crate::data::{chrono_split, load_series, prepare, random_split, Prepared};
use crate::error::Result;
use crate::synth::{pattern2d_generate, synth_generate, DEFAULT_DOMAIN};

const RESAMPLE_SALT: u64 = 0x7265_7361_6d70_6c65;
const QUANTILE_SALT: u64 = 0x7175_616e_7469_6c65;

/// One evaluated (dataset, method, seed) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub dataset: String,
    pub method: Method,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    /// Mean negative log predictive density in original units.
    pub nlpd: f64,
    pub coverage95: f64,
    /// Training or sampling time, excluding prediction.
    pub wall_seconds: f64,
    /// Nested sampling only.
    pub log_evidence: Option<f64>,
    /// Mean noise standard deviation over mixture components, original units.
    pub noise_sd: f64,
    pub n_components: usize,
    pub failed_components: usize,
    pub error: Option<String>,
}

impl ResultRow {
    fn failed(dataset: String, method: Method, seed: u64, msg: String) -> Self {
        Self {
            dataset,
            method,
            seed,
            n_train: 0,
            n_test: 0,
            nlpd: f64::NAN,
            coverage95: f64::NAN,
            wall_seconds: 0.0,
            log_evidence: None,
            noise_sd: f64::NAN,
            n_components: 0,
            failed_components: 0,
            error: Some(msg),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Everything a successful job produced besides its summary row.
#[derive(Debug, Clone)]
pub struct JobArtifacts {
    pub data: Prepared,
    /// Hyperparameters in model units, one per mixture component.
    pub thetas: Vec<SmHyperParams>,
    pub mixture: PredictiveMixture,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl JobArtifacts {
    pub fn norm(&self) -> &NormRecord {
        &self.data.train.norm
    }
}

#[derive(Debug, Clone)]
pub struct JobOutput {
    pub row: ResultRow,
    pub artifacts: Option<JobArtifacts>,
}

/// A dataset source, resolved per seed.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Series(std::path::PathBuf),
    Synthetic,
    Pattern2d,
}

impl Source {
    pub fn name(&self, cfg: &ExperimentConfig) -> String {
        match self {
            Source::Series(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string()),
            Source::Synthetic => format!("synth_n{}_noise{}", cfg.synth.n_train, cfg.synth.noise_sd),
            Source::Pattern2d => "pattern2d".into(),
        }
    }
}

pub fn sources(cfg: &ExperimentConfig) -> Vec<Source> {
    match cfg.task {
        Task::Timeseries => cfg.data_paths.iter().cloned().map(Source::Series).collect(),
        Task::Synthetic => vec![Source::Synthetic],
        Task::Pattern2d => vec![Source::Pattern2d],
    }
}

/// Builds the normalised training set and held-out test set for one seed.
/// Normalisation statistics come from the training portion only.
pub fn prepare_source(source: &Source, cfg: &ExperimentConfig, seed: u64) -> Result<Prepared> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (train, test) = match source {
        Source::Series(path) => chrono_split(&load_series(path)?, cfg.split_fraction)?,
        Source::Synthetic => {
            let s = &cfg.synth;
            let truth = s.preset.params();
            let (all, _) = synth_generate(&truth, s.n_train + s.n_test, s.noise_sd, DEFAULT_DOMAIN, &mut rng)?;
            random_split(&all, s.n_train, &mut rng)?
        }
        Source::Pattern2d => pattern2d_generate(cfg.pattern.n_train, cfg.pattern.grid, &mut rng)?,
    };
    prepare(&train, &test)
}

/// Hyperparameter draws (model units) and, for nested sampling, the log
/// evidence.
pub fn infer(
    method: Method,
    data: &mgpns_core::Dataset,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(Vec<SmHyperParams>, Option<f64>)> {
    let q = cfg.q_components;
    let bounds = data.frequency_bounds()?;
    match method {
        Method::Ml2 => {
            let c = Ml2Config {
                seed,
                ..cfg.ml2.clone()
            };
            let fit = ml2_train_detailed(data, q, &bounds.f_nyq, &c)?;
            Ok((vec![fit.params], None))
        }
        Method::Hmc => {
            let spec = PriorSpec::all_lognormal(q, &bounds);
            let c = HmcConfig {
                seed,
                ..cfg.hmc.clone()
            };
            let trace = hmc_run(data, &spec, q, &c)?;
            Ok((thin(&trace.samples, cfg.m_components), None))
        }
        Method::Nested => {
            let spec = PriorSpec::piecewise(q, &bounds).with_identifiability(cfg.identifiability);
            let c = NestedConfig {
                seed,
                ..cfg.nested.clone()
            };
            let post = run_nested(
                |p: &SmHyperParams| log_marginal_likelihood(data, p).unwrap_or(f64::NEG_INFINITY),
                &spec,
                &c,
            )?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ RESAMPLE_SALT);
            Ok((
                resample_equal(&post, cfg.m_components, &mut rng),
                Some(post.log_evidence),
            ))
        }
    }
}

/// Every `ceil(len / m)`-th draw, starting with the first.
pub fn thin<T: Clone>(draws: &[T], m: usize) -> Vec<T> {
    let step = draws.len().div_ceil(m.max(1)).max(1);
    draws.iter().step_by(step).cloned().collect()
}

pub fn run_job(source: &Source, method: Method, seed: u64, cfg: &ExperimentConfig, inner: Execution) -> JobOutput {
    let name = source.name(cfg);
    match run_job_inner(source, method, seed, cfg, inner) {
        Ok((row, artifacts)) => JobOutput {
            row,
            artifacts: Some(artifacts),
        },
        Err(e) => JobOutput {
            row: ResultRow::failed(name, method, seed, e.to_string()),
            artifacts: None,
        },
    }
}

fn run_job_inner(
    source: &Source,
    method: Method,
    seed: u64,
    cfg: &ExperimentConfig,
    inner: Execution,
) -> Result<(ResultRow, JobArtifacts)> {
    let data = prepare_source(source, cfg, seed)?;
    let train = &data.train;
    let norm = &train.norm;

    let start = Instant::now();
    let (thetas, log_evidence) = infer(method, train, cfg, seed)?;
    let wall_seconds = start.elapsed().as_secs_f64();

    let mixture = mixture_predict_with(train, &thetas, &data.test_inputs, inner)?;
    let nlpd = nlpd(&mixture, &data.test_targets, norm);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ QUANTILE_SALT);
    let q = mixture_quantiles_with(&mixture, &[0.025, 0.975], cfg.quantile_draws, norm, &mut rng, inner)?;
    let (lower, upper): (Vec<f64>, Vec<f64>) = q.iter().map(|b| (b[0], b[1])).unzip();
    let bounds: Vec<(f64, f64)> = lower.iter().copied().zip(upper.iter().copied()).collect();
    let coverage95 = coverage(&bounds, &data.test_targets);
    let noise_sd = thetas
        .iter()
        .map(|t| t.noise_variance.sqrt() * norm.output_std)
        .sum::<f64>()
        / thetas.len() as f64;

    let row = ResultRow {
        dataset: source.name(cfg),
        method,
        seed,
        n_train: train.len(),
        n_test: data.test_targets.len(),
        nlpd,
        coverage95,
        wall_seconds,
        log_evidence,
        noise_sd,
        n_components: mixture.components.len(),
        failed_components: mixture.failed,
        error: None,
    };
    let mean = mixture.mean(norm);
    Ok((
        row,
        JobArtifacts {
            data,
            thetas,
            mixture,
            mean,
            lower,
            upper,
        },
    ))
}

/// All (dataset, seed, method) jobs in that order. Failures are recorded in
/// their row and never abort the batch.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<JobOutput>> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    for source in sources(cfg) {
        for &seed in &cfg.seeds {
            for &method in &cfg.methods {
                jobs.push((source.clone(), seed, method));
            }
        }
    }
    // Jobs already saturate the pool, so per-job work runs sequentially.
    let inner = if cfg.execution.is_parallel() {
        Execution::Sequential
    } else {
        cfg.execution
    };
    let cfg = ExperimentConfig {
        ml2: Ml2Config {
            execution: inner,
            ..cfg.ml2.clone()
        },
        nested: NestedConfig {
            execution: inner,
            ..cfg.nested.clone()
        },
        ..cfg.clone()
    };
    Ok(cfg
        .execution
        .map_slice(&jobs, |(s, seed, m)| run_job(s, *m, *seed, &cfg, inner)))
}

/// Convenience for tests and the CLI: one series file, one method.
pub fn run_series(path: &Path, method: Method, seed: u64, cfg: &ExperimentConfig) -> JobOutput {
    run_job(&Source::Series(path.to_owned()), method, seed, cfg, cfg.execution)
}
