use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Affine maps between original and model units.
///
/// Model inputs are `(x - input_offset) / input_scale`; model targets are
/// `(y - output_mean) / output_std`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormRecord {
    pub input_offset: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub output_mean: f64,
    pub output_std: f64,
}

impl NormRecord {
    pub fn identity(d: usize) -> Self {
        Self {
            input_offset: vec![0.0; d],
            input_scale: vec![1.0; d],
            output_mean: 0.0,
            output_std: 1.0,
        }
    }

    pub fn normalize_input(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.input_offset.iter().zip(&self.input_scale))
            .map(|(v, (o, s))| (v - o) / s)
            .collect()
    }

    pub fn denormalize_input(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.input_offset.iter().zip(&self.input_scale))
            .map(|(v, (o, s))| v * s + o)
            .collect()
    }

    pub fn normalize_target(&self, y: f64) -> f64 {
        (y - self.output_mean) / self.output_std
    }

    pub fn denormalize_mean(&self, m: f64) -> f64 {
        m * self.output_std + self.output_mean
    }

    pub fn denormalize_variance(&self, v: f64) -> f64 {
        v * self.output_std * self.output_std
    }
}

/// Regression data in model units plus the record that maps them back.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `N x D` inputs.
    pub inputs: DMatrix<f64>,
    pub targets: DVector<f64>,
    pub norm: NormRecord,
}

impl Dataset {
    /// Builds a dataset with an identity normalisation record.
    pub fn new(inputs: DMatrix<f64>, targets: DVector<f64>) -> Result<Self> {
        let d = inputs.ncols();
        Self::with_norm(inputs, targets, NormRecord::identity(d))
    }

    pub fn with_norm(inputs: DMatrix<f64>, targets: DVector<f64>, norm: NormRecord) -> Result<Self> {
        if inputs.nrows() == 0 || inputs.ncols() == 0 {
            return Err(Error::Shape("dataset needs N >= 1 and D >= 1".into()));
        }
        if inputs.nrows() != targets.len() {
            return Err(Error::Shape(format!(
                "{} inputs but {} targets",
                inputs.nrows(),
                targets.len()
            )));
        }
        if norm.input_offset.len() != inputs.ncols() || norm.input_scale.len() != inputs.ncols() {
            return Err(Error::Shape("normalisation record dimension mismatch".into()));
        }
        if norm.input_scale.iter().any(|s| !(*s > 0.0)) || !(norm.output_std > 0.0) {
            return Err(Error::Domain("normalisation scales must be positive".into()));
        }
        Ok(Self { inputs, targets, norm })
    }

    /// One-dimensional convenience constructor.
    pub fn from_1d(x: &[f64], y: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_column_slice(x.len(), 1, x), DVector::from_column_slice(y))
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> usize {
        self.inputs.ncols()
    }

    /// Fundamental and Nyquist frequencies of the inputs, per dimension.
    pub fn frequency_bounds(&self) -> Result<FrequencyBounds> {
        FrequencyBounds::from_inputs(&self.inputs)
    }

    /// Largest Euclidean distance between two inputs.
    pub fn max_pairwise_distance(&self) -> f64 {
        let n = self.len();
        let mut best: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let d2: f64 = (0..self.dims())
                    .map(|k| (self.inputs[(i, k)] - self.inputs[(j, k)]).powi(2))
                    .sum();
                best = best.max(d2);
            }
        }
        best.sqrt()
    }
}

/// Lowest and highest resolvable frequency per input dimension, in cycles
/// per input unit.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyBounds {
    pub f_fun: Vec<f64>,
    pub f_nyq: Vec<f64>,
}

/// Relative tolerance for treating adjacent spacings as a regular grid.
const GRID_TOL: f64 = 1e-6;

impl FrequencyBounds {
    /// `f_fun = 1 / span`; `f_nyq = N / (2 span)` on a regular grid, otherwise
    /// half the reciprocal of the median spacing between distinct sorted
    /// coordinates. `f_nyq` is floored at `2 f_fun` so the frequency prior
    /// always has a non-empty upper branch.
    pub fn from_inputs(x: &DMatrix<f64>) -> Result<Self> {
        let mut f_fun = Vec::with_capacity(x.ncols());
        let mut f_nyq = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let mut v: Vec<f64> = col.iter().copied().collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            if v.len() < 2 {
                return Err(Error::DegenerateData("constant input dimension".into()));
            }
            let span = v[v.len() - 1] - v[0];
            let gaps: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
            let (gmin, gmax) = gaps
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(a, b), g| (a.min(*g), b.max(*g)));
            let ff = 1.0 / span;
            let nyq = if gmax - gmin <= GRID_TOL * gmax {
                v.len() as f64 / (2.0 * span)
            } else {
                let mut sorted = gaps.clone();
                sorted.sort_by(f64::total_cmp);
                let mid = sorted.len() / 2;
                let median = if sorted.len().is_multiple_of(2) {
                    0.5 * (sorted[mid - 1] + sorted[mid])
                } else {
                    sorted[mid]
                };
                0.5 / median
            };
            f_fun.push(ff);
            f_nyq.push(nyq.max(2.0 * ff));
        }
        Ok(Self { f_fun, f_nyq })
    }
}
