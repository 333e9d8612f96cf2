use crate::error::{Error, Result};

/// Per-row reconstruction losses, in the row order of the scored matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyScores(Vec<f64>);

impl AnomalyScores {
    /// Wraps scores after checking they are finite and non-negative.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Parameter(format!(
                "score {} at row {i} is not a finite non-negative value",
                values[i]
            )));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self(indices.iter().map(|&i| self.0[i]).collect())
    }

    pub fn min(&self) -> Option<f64> {
        self.iter().reduce(f64::min)
    }

    pub fn max(&self) -> Option<f64> {
        self.iter().reduce(f64::max)
    }

    /// Median by sorting a copy; the mean of the middle pair for even counts.
    pub fn median(&self) -> Option<f64> {
        if self.0.is_empty() {
            return None;
        }
        let mut s = self.0.clone();
        s.sort_by(f64::total_cmp);
        let n = s.len();
        Some(if n % 2 == 1 {
            s[n / 2]
        } else {
            0.5 * (s[n / 2 - 1] + s[n / 2])
        })
    }
}

impl AsRef<[f64]> for AnomalyScores {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}
