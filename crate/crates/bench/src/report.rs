//! CSV outputs: per-row results, summaries, timings, per-point predictions
//! and mixture components for NLPD recomputation.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mgpns_core::stats::{log_sum_exp, mean, normal_log_pdf, sample_std};

use crate::config::Method;
use crate::error::{BenchError, Result};
use crate::experiment::{JobArtifacts, JobOutput, ResultRow};

pub const RESULTS: &str = "results.csv";
pub const SUMMARY: &str = "summary.csv";
pub const TIMING: &str = "timing.csv";
pub const PREDICTIONS: &str = "predictions";
pub const MIXTURES: &str = "mixtures";

/// `results.csv` row. Wall time lives in `timing.csv` so that repeated runs
/// give byte-identical results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ResultRecord {
    dataset: String,
    method: String,
    seed: u64,
    n_train: usize,
    n_test: usize,
    nlpd: f64,
    coverage95: f64,
    log_evidence: Option<f64>,
    noise_sd: f64,
    n_components: usize,
    failed_components: usize,
    error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TimingRecord {
    dataset: String,
    method: String,
    seed: u64,
    wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub dataset: String,
    pub method: String,
    /// Successful rows aggregated.
    pub n: usize,
    pub failed: usize,
    pub nlpd_mean: f64,
    pub nlpd_se: f64,
    pub coverage_mean: f64,
    pub coverage_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureRecord {
    pub point: usize,
    pub component: usize,
    pub weight: f64,
    /// Component mean and variance in original units.
    pub mean: f64,
    pub variance: f64,
}

/// One line of a prediction file.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub x: Vec<f64>,
    pub y_true: f64,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_owned(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> BenchError + '_ {
    move |source| BenchError::Csv {
        path: path.to_owned(),
        source,
    }
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(csv_err(path))
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    csv::Reader::from_path(path).map_err(csv_err(path))
}

fn write_all<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = writer(path)?;
    for r in records {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn read_all<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = reader(path)?;
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err(path))
}

/// Stem shared by a row's prediction and mixture files.
pub fn artifact_stem(row: &ResultRow) -> String {
    format!("{}_{}_seed{}", row.dataset, row.method, row.seed)
}

pub fn prediction_path(dir: &Path, row: &ResultRow) -> PathBuf {
    dir.join(PREDICTIONS).join(format!("{}.csv", artifact_stem(row)))
}

pub fn mixture_path(dir: &Path, row: &ResultRow) -> PathBuf {
    dir.join(MIXTURES).join(format!("{}.csv", artifact_stem(row)))
}

/// Per dataset x method mean and standard error (sample std / sqrt n) of
/// NLPD and coverage over successful rows.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRecord> {
    let mut groups: BTreeMap<(String, Method), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.dataset.clone(), r.method)).or_default().push(r);
    }
    let se = |xs: &[f64]| {
        if xs.len() < 2 {
            0.0
        } else {
            sample_std(xs) / (xs.len() as f64).sqrt()
        }
    };
    groups
        .into_iter()
        .map(|((dataset, method), rs)| {
            let ok: Vec<&ResultRow> = rs.iter().copied().filter(|r| r.is_ok()).collect();
            let nl: Vec<f64> = ok.iter().map(|r| r.nlpd).collect();
            let cv: Vec<f64> = ok.iter().map(|r| r.coverage95).collect();
            let m = |xs: &[f64]| if xs.is_empty() { f64::NAN } else { mean(xs) };
            SummaryRecord {
                dataset,
                method: method.to_string(),
                n: ok.len(),
                failed: rs.len() - ok.len(),
                nlpd_mean: m(&nl),
                nlpd_se: se(&nl),
                coverage_mean: m(&cv),
                coverage_se: se(&cv),
            }
        })
        .collect()
}

/// Writes results, summary, timing and per-row prediction and mixture files
/// under `out_dir`.
pub fn emit_report(outputs: &[JobOutput], out_dir: &Path) -> Result<()> {
    if outputs.is_empty() {
        return Err(BenchError::Config("no rows to report".into()));
    }
    for sub in [PREDICTIONS, MIXTURES] {
        let d = out_dir.join(sub);
        fs::create_dir_all(&d).map_err(io_err(&d))?;
    }
    let rows: Vec<ResultRow> = outputs.iter().map(|o| o.row.clone()).collect();
    write_results(&rows, out_dir)?;
    for o in outputs {
        if let Some(a) = &o.artifacts {
            write_predictions(&prediction_path(out_dir, &o.row), a)?;
            write_mixture(&mixture_path(out_dir, &o.row), a)?;
        }
    }
    Ok(())
}

/// Writes `results.csv`, `timing.csv` and `summary.csv`.
pub fn write_results(rows: &[ResultRow], out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    write_all(
        &out_dir.join(RESULTS),
        rows.iter().map(|r| ResultRecord {
            dataset: r.dataset.clone(),
            method: r.method.to_string(),
            seed: r.seed,
            n_train: r.n_train,
            n_test: r.n_test,
            nlpd: r.nlpd,
            coverage95: r.coverage95,
            log_evidence: r.log_evidence,
            noise_sd: r.noise_sd,
            n_components: r.n_components,
            failed_components: r.failed_components,
            error: r.error.clone(),
        }),
    )?;
    write_all(
        &out_dir.join(TIMING),
        rows.iter().map(|r| TimingRecord {
            dataset: r.dataset.clone(),
            method: r.method.to_string(),
            seed: r.seed,
            wall_seconds: r.wall_seconds,
        }),
    )?;
    write_all(&out_dir.join(SUMMARY), summarize(rows))
}

fn write_predictions(path: &Path, a: &JobArtifacts) -> Result<()> {
    let x = &a.data.test_inputs_raw;
    let d = x.ncols();
    let mut w = writer(path)?;
    let mut header: Vec<String> = if d == 1 {
        vec!["x".into()]
    } else {
        (1..=d).map(|j| format!("x{j}")).collect()
    };
    header.extend(["y_true", "mean", "lower", "upper"].map(String::from));
    w.write_record(&header).map_err(csv_err(path))?;
    for i in 0..x.nrows() {
        let mut rec: Vec<String> = (0..d).map(|j| x[(i, j)].to_string()).collect();
        rec.extend(
            [a.data.test_targets[i], a.mean[i], a.lower[i], a.upper[i]]
                .iter()
                .map(f64::to_string),
        );
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn write_mixture(path: &Path, a: &JobArtifacts) -> Result<()> {
    let norm = a.norm();
    let mix = &a.mixture;
    let records = (0..mix.n_points()).flat_map(|i| {
        mix.point(i)
            .into_iter()
            .enumerate()
            .map(move |(c, (m, v, w))| MixtureRecord {
                point: i,
                component: c,
                weight: w,
                mean: norm.denormalize_mean(m),
                variance: norm.denormalize_variance(v),
            })
    });
    write_all(path, records)
}

/// Reads `results.csv`, joining wall times from `timing.csv` when present.
pub fn read_results(dir: &Path) -> Result<Vec<ResultRow>> {
    let path = dir.join(RESULTS);
    let records: Vec<ResultRecord> = read_all(&path)?;
    let timing_path = dir.join(TIMING);
    let timing: Vec<TimingRecord> = if timing_path.exists() {
        read_all(&timing_path)?
    } else {
        Vec::new()
    };
    let lookup: BTreeMap<(String, String, u64), f64> = timing
        .into_iter()
        .map(|t| ((t.dataset, t.method, t.seed), t.wall_seconds))
        .collect();
    records
        .into_iter()
        .map(|r| {
            let method: Method = r.method.parse()?;
            let wall = lookup
                .get(&(r.dataset.clone(), r.method.clone(), r.seed))
                .copied()
                .unwrap_or(0.0);
            Ok(ResultRow {
                dataset: r.dataset,
                method,
                seed: r.seed,
                n_train: r.n_train,
                n_test: r.n_test,
                nlpd: r.nlpd,
                coverage95: r.coverage95,
                wall_seconds: wall,
                log_evidence: r.log_evidence,
                noise_sd: r.noise_sd,
                n_components: r.n_components,
                failed_components: r.failed_components,
                error: r.error,
            })
        })
        .collect()
}

pub fn read_summary(dir: &Path) -> Result<Vec<SummaryRecord>> {
    read_all(&dir.join(SUMMARY))
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let mut r = reader(path)?;
    let width = r.headers().map_err(csv_err(path))?.len();
    if width < 5 {
        return Err(BenchError::Parse {
            path: path.to_owned(),
            line: 1,
            message: "prediction file needs at least five columns".into(),
        });
    }
    let d = width - 4;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| {
                s.parse().map_err(|_| BenchError::Parse {
                    path: path.to_owned(),
                    line: i + 2,
                    message: format!("not a number: `{s}`"),
                })
            })
            .collect::<Result<_>>()?;
        out.push(PredictionRecord {
            x: vals[..d].to_vec(),
            y_true: vals[d],
            mean: vals[d + 1],
            lower: vals[d + 2],
            upper: vals[d + 3],
        });
    }
    Ok(out)
}

pub fn read_mixture(path: &Path) -> Result<Vec<MixtureRecord>> {
    read_all(path)
}

/// Mean negative log density of `y_true` under the emitted mixture.
pub fn recompute_nlpd(mixture: &[MixtureRecord], y_true: &[f64]) -> f64 {
    let mut per_point: Vec<Vec<f64>> = vec![Vec::new(); y_true.len()];
    for m in mixture {
        per_point[m.point].push(m.weight.ln() + normal_log_pdf(y_true[m.point], m.mean, m.variance));
    }
    -per_point.iter().map(|t| log_sum_exp(t)).sum::<f64>() / y_true.len() as f64
}

/// Recomputes a row's NLPD from its prediction and mixture files.
pub fn recompute_row_nlpd(dir: &Path, row: &ResultRow) -> Result<f64> {
    let preds = read_predictions(&prediction_path(dir, row))?;
    let mix = read_mixture(&mixture_path(dir, row))?;
    let y: Vec<f64> = preds.iter().map(|p| p.y_true).collect();
    Ok(recompute_nlpd(&mix, &y))
}
