//! Series ingestion, normalisation and train/test splitting.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use mgpns_core::stats::{mean, population_std};
use mgpns_core::{Dataset, Error as CoreError, NormRecord};

use crate::error::{BenchError, Result};

/// Reads a two-column `x,y` CSV with header, sorted ascending by `x`.
pub fn load_series(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_series(&text, path)
}

pub fn parse_series(text: &str, path: &Path) -> Result<Dataset> {
    let parse_err = |line: usize, message: String| BenchError::Parse {
        path: path.to_owned(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.split(',').map(str::trim).eq(["x", "y"]) => {}
        Some((_, h)) => return Err(parse_err(1, format!("expected header `x,y`, found `{h}`"))),
        None => return Err(parse_err(1, "empty file".into())),
    }
    let mut rows: Vec<(f64, f64, usize)> = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 2 {
            return Err(parse_err(lineno, format!("expected 2 cells, found {}", cells.len())));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(lineno, format!("not a finite number: `{s}`")))
        };
        rows.push((num(cells[0])?, num(cells[1])?, lineno));
    }
    if rows.is_empty() {
        return Err(parse_err(2, "no data rows".into()));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(BenchError::DuplicateInput {
            path: path.to_owned(),
            line: w[0].2.max(w[1].2),
            x: w[1].0,
        });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.1).collect();
    Ok(Dataset::from_1d(&x, &y)?)
}

/// Normalisation statistics of `data` (assumed in original units):
/// inputs min-max to [0, 1] per dimension, targets to zero mean and unit
/// (population) standard deviation.
pub fn fit_norm(data: &Dataset) -> Result<NormRecord> {
    if data.len() < 2 {
        return Err(CoreError::DegenerateData("normalisation needs at least two points".into()).into());
    }
    let mut offset = Vec::with_capacity(data.dims());
    let mut scale = Vec::with_capacity(data.dims());
    for col in data.inputs.column_iter() {
        let lo = col.min();
        let hi = col.max();
        if !(hi > lo) {
            return Err(CoreError::DegenerateData("constant input dimension".into()).into());
        }
        offset.push(lo);
        scale.push(hi - lo);
    }
    let y: Vec<f64> = data.targets.iter().copied().collect();
    let sd = population_std(&y);
    if !(sd > 0.0) {
        return Err(CoreError::DegenerateData("constant targets".into()).into());
    }
    Ok(NormRecord {
        input_offset: offset,
        input_scale: scale,
        output_mean: mean(&y),
        output_std: sd,
    })
}

/// Expresses original-unit inputs in the model units of `norm`.
pub fn apply_inputs(x: &DMatrix<f64>, norm: &NormRecord) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
        (x[(i, j)] - norm.input_offset[j]) / norm.input_scale[j]
    })
}

pub fn apply_norm(data: &Dataset, norm: &NormRecord) -> Result<Dataset> {
    let y = data.targets.map(|v| norm.normalize_target(v));
    Ok(Dataset::with_norm(apply_inputs(&data.inputs, norm), y, norm.clone())?)
}

/// Normalises `data` by its own statistics.
pub fn normalize(data: &Dataset) -> Result<Dataset> {
    let norm = fit_norm(data)?;
    apply_norm(data, &norm)
}

fn subset(data: &Dataset, idx: &[usize]) -> Result<Dataset> {
    let d = data.dims();
    let x = DMatrix::from_fn(idx.len(), d, |i, j| data.inputs[(idx[i], j)]);
    let y = DVector::from_iterator(idx.len(), idx.iter().map(|&i| data.targets[i]));
    Ok(Dataset::with_norm(x, y, data.norm.clone())?)
}

/// First `ceil(frac N)` points (in input order) for training, the rest for
/// testing. The training share is clamped to `[1, N - 1]`.
pub fn chrono_split(data: &Dataset, frac: f64) -> Result<(Dataset, Dataset)> {
    if !(frac > 0.0 && frac < 1.0) {
        return Err(BenchError::Config(format!("split fraction {frac} outside (0, 1)")));
    }
    let n = data.len();
    if n < 2 {
        return Err(CoreError::DegenerateData("cannot split fewer than two points".into()).into());
    }
    let n_train = ((frac * n as f64).ceil() as usize).clamp(1, n - 1);
    let idx: Vec<usize> = (0..n).collect();
    Ok((subset(data, &idx[..n_train])?, subset(data, &idx[n_train..])?))
}

/// Uniformly random split with exactly `n_train` training points.
pub fn random_split<R: Rng>(data: &Dataset, n_train: usize, rng: &mut R) -> Result<(Dataset, Dataset)> {
    let n = data.len();
    if n_train == 0 || n_train >= n {
        return Err(BenchError::Config(format!(
            "cannot take {n_train} training points from {n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let (mut tr, mut te) = (idx[..n_train].to_vec(), idx[n_train..].to_vec());
    tr.sort_unstable();
    te.sort_unstable();
    Ok((subset(data, &tr)?, subset(data, &te)?))
}

/// Training data in model units plus the test set kept in original units.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    /// Test inputs in model units.
    pub test_inputs: DMatrix<f64>,
    /// Test inputs and targets in original units.
    pub test_inputs_raw: DMatrix<f64>,
    pub test_targets: Vec<f64>,
}

/// Normalises with statistics from the training portion only.
pub fn prepare(train_raw: &Dataset, test_raw: &Dataset) -> Result<Prepared> {
    let norm = fit_norm(train_raw)?;
    Ok(Prepared {
        train: apply_norm(train_raw, &norm)?,
        test_inputs: apply_inputs(&test_raw.inputs, &norm),
        test_inputs_raw: test_raw.inputs.clone(),
        test_targets: test_raw.targets.iter().copied().collect(),
    })
}
