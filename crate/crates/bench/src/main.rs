use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use mgpns_bench::config::{ExperimentConfig, Method, Preset, Task};
use mgpns_bench::report::{emit_report, read_results, summarize, write_results};
use mgpns_bench::run_experiment;

#[derive(Parser)]
#[command(
    name = "mgpns",
    about = "Spectral mixture GP benchmarks: ML-II, HMC and nested sampling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Synthetic draws from a two-component spectral mixture kernel.
    Synth {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        /// Single seed; overridden by --seeds.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        n_test: usize,
        /// `two_five` or `pi`.
        #[arg(long, default_value = "two_five")]
        preset: String,
        #[command(flatten)]
        common: Common,
    },
    /// The 2-D pattern extrapolation task.
    Pattern2d {
        #[command(flatten)]
        common: Common,
    },
    /// Re-summarise an existing results directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Comma-separated subset of ml2, hmc, nested.
    #[arg(long, value_delimiter = ',')]
    method: Option<Vec<String>>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    live_points: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
}

impl Common {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(m) = &self.method {
            cfg.methods = m.iter().map(|s| s.parse::<Method>()).collect::<Result<_, _>>()?;
        }
        if let Some(q) = self.q {
            cfg.q_components = q;
        }
        if let Some(n) = self.live_points {
            cfg.nested.n_live = n;
        }
        if let Some(s) = &self.seeds {
            cfg.seeds = s.clone();
        }
        cfg.validate()?;
        Ok(())
    }
}

fn execute(cfg: &ExperimentConfig, out: &std::path::Path) -> Result<()> {
    let outputs = run_experiment(cfg)?;
    emit_report(&outputs, out).with_context(|| format!("writing report to {}", out.display()))?;
    for o in &outputs {
        let r = &o.row;
        match &r.error {
            None => println!(
                "{:<24} {:<7} seed={:<4} nlpd={:>10.4} cov95={:.3} time={:.2}s{}",
                r.dataset,
                r.method,
                r.seed,
                r.nlpd,
                r.coverage95,
                r.wall_seconds,
                r.log_evidence.map(|z| format!(" logZ={z:.3}")).unwrap_or_default()
            ),
            Some(e) => println!("{:<24} {:<7} seed={:<4} FAILED: {e}", r.dataset, r.method, r.seed),
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> Result<()> {
    if let Ok(v) = std::env::var("MGPNS_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("MGPNS_THREADS=`{v}` is not a count"))?;
        if !mgpns_core::exec::configure_threads(n) {
            eprintln!("warning: MGPNS_THREADS ignored, thread pool already initialised");
        }
    }
    match Cli::parse().command {
        Command::Run { config, common } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            common.apply(&mut cfg)?;
            execute(&cfg, &common.out)
        }
        Command::Synth {
            n,
            noise,
            seed,
            n_test,
            preset,
            common,
        } => {
            let mut cfg = ExperimentConfig::new(Task::Synthetic);
            cfg.synth.n_train = n;
            cfg.synth.n_test = n_test;
            cfg.synth.noise_sd = noise;
            cfg.synth.preset = preset.parse::<Preset>()?;
            cfg.seeds = vec![seed];
            common.apply(&mut cfg)?;
            execute(&cfg, &common.out)
        }
        Command::Pattern2d { common } => {
            let mut cfg = ExperimentConfig::new(Task::Pattern2d);
            common.apply(&mut cfg)?;
            execute(&cfg, &common.out)
        }
        Command::Report { input } => {
            let rows = read_results(&input)?;
            write_results(&rows, &input)?;
            println!(
                "{:<24} {:<7} {:>3} {:>12} {:>10} {:>8}",
                "dataset", "method", "n", "nlpd", "se", "cov95"
            );
            for s in summarize(&rows) {
                println!(
                    "{:<24} {:<7} {:>3} {:>12.4} {:>10.4} {:>8.3}",
                    s.dataset, s.method, s.n, s.nlpd_mean, s.nlpd_se, s.coverage_mean
                );
            }
            Ok(())
        }
    }
}
