//! Experiment configuration and its flat `key = value` file format.
//!
//! Blank lines and `#` comments are ignored; list values are comma
//! separated. Recognised keys:
//!
//! | key | meaning | default |
//! |---|---|---|
//! | `task` | `synthetic`, `timeseries` or `pattern2d` | required |
//! | `methods` | list of `ml2`, `hmc`, `nested` | all three |
//! | `q` | spectral components | 2 / 7 / 10 by task |
//! | `data` | series CSV paths (timeseries) | |
//! | `split_fraction` | chronological training share | 0.6 |
//! | `seeds` | list of seeds | `0` |
//! | `preset` | synthetic truth, `two_five` or `pi` | `two_five` |
//! | `n_train`, `n_test`, `noise_sd` | synthetic sizes and noise | 10, 50, 0.1 |
//! | `pattern_train`, `grid` | pattern2d sizes | 50, 20 |
//! | `n_live`, `stop_frac`, `n_slices`, `identifiability` | nested sampling | 100, 0.01, 5, true |
//! | `hmc_warmup`, `hmc_samples`, `hmc_path_length`, `hmc_path_jitter`, `hmc_target_accept` | HMC | 500, 500, 20, 0.2, 0.8 |
//! | `ml2_restarts`, `ml2_iters`, `ml2_learning_rate` | ML-II | 5, 2000, 0.05 |
//! | `m_components` | predictive mixture size | 200 |
//! | `quantile_draws` | draws per test point for intervals | 10000 |
//! | `parallel` | run jobs on the thread pool | true |

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mgpns_core::hmc::HmcConfig;
use mgpns_core::ml2::Ml2Config;
use mgpns_core::nested::NestedConfig;
use mgpns_core::{Execution, SmHyperParams};

use crate::error::{BenchError, Result};
use crate::synth;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Task {
    Synthetic,
    Timeseries,
    Pattern2d,
}

impl Task {
    pub fn default_q(self) -> usize {
        match self {
            Task::Synthetic => 2,
            Task::Timeseries => 7,
            Task::Pattern2d => 10,
        }
    }
}

impl FromStr for Task {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synthetic" => Ok(Task::Synthetic),
            "timeseries" => Ok(Task::Timeseries),
            "pattern2d" => Ok(Task::Pattern2d),
            _ => Err(BenchError::Config(format!("unknown task `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Ml2,
    Hmc,
    Nested,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ml2, Method::Hmc, Method::Nested];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ml2 => "ml2",
            Method::Hmc => "hmc",
            Method::Nested => "nested",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ml2" => Ok(Method::Ml2),
            "hmc" => Ok(Method::Hmc),
            "nested" => Ok(Method::Nested),
            _ => Err(BenchError::Config(format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    TwoFive,
    Pi,
}

impl Preset {
    pub fn params(self) -> SmHyperParams {
        match self {
            Preset::TwoFive => synth::preset_two_five(),
            Preset::Pi => synth::preset_pi(),
        }
    }
}

impl FromStr for Preset {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_five" => Ok(Preset::TwoFive),
            "pi" => Ok(Preset::Pi),
            _ => Err(BenchError::Config(format!("unknown preset `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub preset: Preset,
    pub n_train: usize,
    /// Extra points drawn alongside the training set and held out.
    pub n_test: usize,
    pub noise_sd: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            preset: Preset::TwoFive,
            n_train: 10,
            n_test: 50,
            noise_sd: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternConfig {
    pub n_train: usize,
    pub grid: usize,
}

impl Default for PatternConfig {
    fn default() -> Self {
        Self { n_train: 50, grid: 20 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    pub methods: Vec<Method>,
    pub q_components: usize,
    pub data_paths: Vec<PathBuf>,
    pub split_fraction: f64,
    pub seeds: Vec<u64>,
    pub synth: SynthConfig,
    pub pattern: PatternConfig,
    pub ml2: Ml2Config,
    pub hmc: HmcConfig,
    pub nested: NestedConfig,
    /// Ordered first-dimension frequencies in the nested-sampling prior.
    pub identifiability: bool,
    pub m_components: usize,
    pub quantile_draws: usize,
    /// Scheduling of independent (dataset, seed, method) jobs.
    pub execution: Execution,
}

impl ExperimentConfig {
    pub fn new(task: Task) -> Self {
        Self {
            task,
            methods: Method::ALL.to_vec(),
            q_components: task.default_q(),
            data_paths: Vec::new(),
            split_fraction: 0.6,
            seeds: vec![0],
            synth: SynthConfig::default(),
            pattern: PatternConfig::default(),
            ml2: Ml2Config::default(),
            hmc: HmcConfig::default(),
            nested: NestedConfig::default(),
            identifiability: true,
            m_components: 200,
            quantile_draws: 10_000,
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(BenchError::Config(m.into()));
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return bad("split_fraction must lie in (0, 1)");
        }
        if self.q_components == 0 {
            return bad("q must be at least 1");
        }
        if self.methods.is_empty() || self.seeds.is_empty() {
            return bad("need at least one method and one seed");
        }
        if self.task == Task::Timeseries && self.data_paths.is_empty() {
            return bad("timeseries task needs `data`");
        }
        if self.m_components == 0 {
            return bad("m_components must be positive");
        }
        if self.task == Task::Synthetic && (self.synth.n_train < 2 || self.synth.n_test < 1) {
            return bad("synthetic task needs n_train >= 2 and n_test >= 1");
        }
        if !(self.synth.noise_sd >= 0.0) {
            return bad("noise_sd must be non-negative");
        }
        self.ml2.validate()?;
        self.hmc.validate()?;
        self.nested.validate()?;
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            BenchError::Config(m) => BenchError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| BenchError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            pairs.push((i + 1, k.trim().to_owned(), v.trim().to_owned()));
        }
        let task = pairs
            .iter()
            .find(|(_, k, _)| k == "task")
            .ok_or_else(|| BenchError::Config("missing `task`".into()))?
            .2
            .parse()?;
        let mut cfg = Self::new(task);
        for (line, k, v) in &pairs {
            cfg.set(k, v)
                .map_err(|e| BenchError::Config(format!("line {line}: {k}: {}", strip(e))))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "task" => {}
            "methods" | "method" => self.methods = list(value)?,
            "q" | "q_components" => self.q_components = num(value)?,
            "data" | "data_path" => self.data_paths = value.split(',').map(|s| PathBuf::from(s.trim())).collect(),
            "split_fraction" => self.split_fraction = num(value)?,
            "seeds" => self.seeds = list(value)?,
            "preset" => self.synth.preset = value.parse()?,
            "n_train" => self.synth.n_train = num(value)?,
            "n_test" => self.synth.n_test = num(value)?,
            "noise_sd" => self.synth.noise_sd = num(value)?,
            "pattern_train" => self.pattern.n_train = num(value)?,
            "grid" => self.pattern.grid = num(value)?,
            "n_live" | "live_points" => self.nested.n_live = num(value)?,
            "stop_frac" => self.nested.stop_frac = num(value)?,
            "n_slices" => self.nested.n_slices = num(value)?,
            "identifiability" => self.identifiability = num(value)?,
            "hmc_warmup" => self.hmc.n_warmup = num(value)?,
            "hmc_samples" => self.hmc.n_samples = num(value)?,
            "hmc_path_length" => self.hmc.path_length = num(value)?,
            "hmc_path_jitter" => self.hmc.path_jitter = num(value)?,
            "hmc_step_jitter" => self.hmc.step_jitter = num(value)?,
            "hmc_target_accept" => self.hmc.target_accept = num(value)?,
            "ml2_restarts" => self.ml2.n_restarts = num(value)?,
            "ml2_iters" => self.ml2.max_iters = num(value)?,
            "ml2_learning_rate" => self.ml2.learning_rate = num(value)?,
            "m_components" => self.m_components = num(value)?,
            "quantile_draws" => self.quantile_draws = num(value)?,
            "parallel" => {
                self.execution = if num::<bool>(value)? {
                    Execution::Parallel
                } else {
                    Execution::Sequential
                }
            }
            _ => return Err(BenchError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }
}

fn strip(e: BenchError) -> String {
    match e {
        BenchError::Config(m) => m,
        other => other.to_string(),
    }
}

fn num<T: FromStr>(v: &str) -> Result<T> {
    v.parse().map_err(|_| BenchError::Config(format!("cannot parse `{v}`")))
}

fn list<T: FromStr>(v: &str) -> Result<Vec<T>> {
    v.split(',').map(|s| num(s.trim())).collect()
}
