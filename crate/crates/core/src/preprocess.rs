//! Train/test splitting, class partitioning and the two feature scalers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg::DataMatrix;

/// Held-out fraction and shuffle seed for [`train_test_split`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            seed: 111,
        }
    }
}

impl SplitSpec {
    pub fn new(test_fraction: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            test_fraction,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.test_fraction) {
            return Err(Error::Parameter(format!(
                "test fraction must be in [0, 1), got {}",
                self.test_fraction
            )));
        }
        Ok(())
    }

    pub fn test_size(&self, n: usize) -> usize {
        ((n as f64) * self.test_fraction).round() as usize
    }
}

/// Seeded Fisher–Yates permutation of `0..n`.
///
/// Walks `i` from `n - 1` down to 1 and swaps position `i` with a uniform
/// draw from `0..=i`.
pub fn seeded_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    shuffle_in_place(&mut idx, &mut rng);
    idx
}

pub(crate) fn shuffle_in_place<T, R: Rng>(items: &mut [T], rng: &mut R) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}

/// Index sets produced by a split, in shuffled order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles row indices and takes the first `round(n * test_fraction)` as
/// the test partition; the rest is train.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<SplitIndices> {
    spec.validate()?;
    let perm = seeded_permutation(n, spec.seed);
    let n_test = spec.test_size(n);
    Ok(SplitIndices {
        test: perm[..n_test].to_vec(),
        train: perm[n_test..].to_vec(),
    })
}

pub fn train_test_split(
    dataset: &LabeledDataset,
    spec: &SplitSpec,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if dataset.is_empty() {
        return Err(Error::Degenerate("cannot split an empty dataset".into()));
    }
    let idx = split_indices(dataset.len(), spec)?;
    Ok((dataset.select(&idx.train), dataset.select(&idx.test)))
}

/// Separates legitimate (class 0) from fraudulent (class 1) feature rows.
/// The returned matrices hold features only, so time and class are gone.
pub fn split_by_class(dataset: &LabeledDataset) -> Result<(DataMatrix, DataMatrix)> {
    let mut legit = Vec::new();
    let mut fraud = Vec::new();
    for (row, &label) in dataset.labels.iter().enumerate() {
        match label {
            0 => legit.push(row),
            1 => fraud.push(row),
            other => {
                return Err(Error::LabelDomain {
                    row,
                    value: other.to_string(),
                })
            }
        }
    }
    Ok((
        dataset.features.select_rows(&legit),
        dataset.features.select_rows(&fraud),
    ))
}

fn check_cols(expected: usize, x: &DataMatrix) -> Result<()> {
    if x.cols() != expected {
        return Err(Error::Shape(format!(
            "scaler was fitted on {expected} columns, got {}",
            x.cols()
        )));
    }
    Ok(())
}

/// Per-column affine map onto `[0, 1]` using fitted extrema.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(x: &DataMatrix) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::Degenerate("cannot fit min-max on zero rows".into()));
        }
        let mut min = x.row(0).to_vec();
        let mut max = x.row(0).to_vec();
        for row in x.row_iter().skip(1) {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(Self { min, max })
    }

    pub fn n_features(&self) -> usize {
        self.min.len()
    }

    /// Constant columns map to 0. Values outside the fitted range are not
    /// clipped.
    pub fn transform(&self, x: &DataMatrix) -> Result<DataMatrix> {
        check_cols(self.n_features(), x)?;
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (j, v) in out.row_mut(r).iter_mut().enumerate() {
                let range = self.max[j] - self.min[j];
                *v = if range > 0.0 {
                    (*v - self.min[j]) / range
                } else {
                    0.0
                };
            }
        }
        Ok(out)
    }

    pub fn inverse_transform(&self, x: &DataMatrix) -> Result<DataMatrix> {
        check_cols(self.n_features(), x)?;
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (j, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = self.min[j] + *v * (self.max[j] - self.min[j]);
            }
        }
        Ok(out)
    }
}

pub fn minmax_fit(x: &DataMatrix) -> Result<MinMaxScaler> {
    MinMaxScaler::fit(x)
}

pub fn minmax_transform(scaler: &MinMaxScaler, x: &DataMatrix) -> Result<DataMatrix> {
    scaler.transform(x)
}

/// Per-column z-scores with the sample (n − 1) standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardScaler {
    pub fn fit(x: &DataMatrix) -> Result<Self> {
        if x.rows() < 2 {
            return Err(Error::Degenerate(format!(
                "standardization needs at least 2 rows, got {}",
                x.rows()
            )));
        }
        let mean = x.column_means();
        let mut ss = vec![0.0; x.cols()];
        for row in x.row_iter() {
            for (j, &v) in row.iter().enumerate() {
                let dv = v - mean[j];
                ss[j] += dv * dv;
            }
        }
        let denom = (x.rows() - 1) as f64;
        let std = ss.into_iter().map(|s| (s / denom).sqrt()).collect();
        Ok(Self { mean, std })
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    /// Zero-variance columns map to 0.
    pub fn transform(&self, x: &DataMatrix) -> Result<DataMatrix> {
        check_cols(self.n_features(), x)?;
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (j, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = if self.std[j] > 0.0 {
                    (*v - self.mean[j]) / self.std[j]
                } else {
                    0.0
                };
            }
        }
        Ok(out)
    }
}

pub fn standard_fit(x: &DataMatrix) -> Result<StandardScaler> {
    StandardScaler::fit(x)
}

pub fn standard_transform(scaler: &StandardScaler, x: &DataMatrix) -> Result<DataMatrix> {
    scaler.transform(x)
}
