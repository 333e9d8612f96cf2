//! PCA reconstruction-error detector.
//!
//! The model is fitted on legitimate rows only. A row is moved into the
//! working space (centered, and optionally divided by the per-feature
//! standard deviation), projected onto the retained components, and scored
//! by the squared norm of what the projection leaves behind.

use crate::error::{Error, Result};
use crate::linalg::{covariance_matrix, dot, eigh_symmetric, DataMatrix};
use crate::preprocess::StandardScaler;
use crate::scores::AnomalyScores;

/// Eigenvalues below this fraction of the largest count as zero when the
/// variance target is 1.
pub const RANK_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentSelection {
    Fixed(usize),
    /// Smallest `k` whose cumulative explained variance reaches the target.
    VarianceTarget(f64),
}

impl Default for ComponentSelection {
    fn default() -> Self {
        ComponentSelection::VarianceTarget(0.95)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Per-feature divisor; all ones when unstandardized.
    pub scale: Vec<f64>,
    /// `d x k`, orthonormal columns.
    pub components: DataMatrix,
    /// Retained eigenvalues, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Sum of all eigenvalues at fit time, dropped ones included.
    pub total_variance: f64,
    pub standardized: bool,
}

impl PcaModel {
    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn k(&self) -> usize {
        self.components.cols()
    }

    /// Centers and scales rows into the working space. Features with zero
    /// scale map to 0.
    pub fn to_working_space(&self, x: &DataMatrix) -> Result<DataMatrix> {
        if x.cols() != self.n_features() {
            return Err(Error::Shape(format!(
                "PCA model expects {} features, got {}",
                self.n_features(),
                x.cols()
            )));
        }
        let mut z = x.clone();
        for r in 0..z.rows() {
            for (j, v) in z.row_mut(r).iter_mut().enumerate() {
                *v = if self.scale[j] > 0.0 {
                    (*v - self.mean[j]) / self.scale[j]
                } else {
                    0.0
                };
            }
        }
        Ok(z)
    }

    /// `C Cᵀ z` for one working-space row.
    pub fn project_row(&self, z: &[f64]) -> Vec<f64> {
        let d = self.n_features();
        let k = self.k();
        let coeffs: Vec<f64> = (0..k)
            .map(|c| {
                let mut acc = 0.0;
                for j in 0..d {
                    acc += self.components.get(j, c) * z[j];
                }
                acc
            })
            .collect();
        (0..d)
            .map(|j| dot(self.components.row(j), &coeffs))
            .collect()
    }
}

fn numerical_rank(eigenvalues: &[f64]) -> usize {
    let largest = eigenvalues.first().copied().unwrap_or(0.0);
    if largest <= 0.0 {
        return 0;
    }
    eigenvalues
        .iter()
        .filter(|&&l| l > RANK_CUTOFF * largest)
        .count()
}

/// Fits PCA to legitimate rows.
pub fn fit_pca(
    x_legit: &DataMatrix,
    selection: ComponentSelection,
    standardized: bool,
) -> Result<PcaModel> {
    if x_legit.rows() < 2 {
        return Err(Error::Degenerate(format!(
            "PCA needs at least 2 rows, got {}",
            x_legit.rows()
        )));
    }
    let d = x_legit.cols();
    if d == 0 {
        return Err(Error::Degenerate("PCA needs at least one feature".into()));
    }
    if let ComponentSelection::VarianceTarget(tau) = selection {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::Parameter(format!(
                "variance target must be in (0, 1], got {tau}"
            )));
        }
    }
    if let ComponentSelection::Fixed(k) = selection {
        if k == 0 || k > d {
            return Err(Error::Parameter(format!(
                "component count must be in 1..={d}, got {k}"
            )));
        }
    }

    let (mean, scale) = if standardized {
        let s = StandardScaler::fit(x_legit)?;
        (s.mean, s.std)
    } else {
        (x_legit.column_means(), vec![1.0; d])
    };
    let mut model = PcaModel {
        mean,
        scale,
        components: DataMatrix::zeros(d, 0),
        eigenvalues: Vec::new(),
        total_variance: 0.0,
        standardized,
    };
    let z = model.to_working_space(x_legit)?;
    let eig = eigh_symmetric(&covariance_matrix(&z)?)?;
    let total: f64 = eig.eigenvalues.iter().sum();
    let rank = numerical_rank(&eig.eigenvalues);
    if rank == 0 {
        return Err(Error::Degenerate("data has no variance".into()));
    }

    let k = match selection {
        ComponentSelection::Fixed(k) => k,
        ComponentSelection::VarianceTarget(tau) => {
            let mut cumulative = 0.0;
            let mut k = d;
            for (i, l) in eig.eigenvalues.iter().enumerate() {
                cumulative += l;
                if cumulative >= tau * total {
                    k = i + 1;
                    break;
                }
            }
            k.min(rank).max(1)
        }
    };

    let mut components = DataMatrix::zeros(d, k);
    for c in 0..k {
        for j in 0..d {
            components.set(j, c, eig.eigenvectors.get(j, c));
        }
    }
    model.components = components;
    model.eigenvalues = eig.eigenvalues[..k].to_vec();
    model.total_variance = total;
    Ok(model)
}

/// Squared residual norm of each row in the model's working space.
pub fn pca_scores(model: &PcaModel, x: &DataMatrix) -> Result<AnomalyScores> {
    let z = model.to_working_space(x)?;
    let scores = z
        .row_iter()
        .map(|row| {
            let proj = model.project_row(row);
            row.iter()
                .zip(&proj)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .collect();
    AnomalyScores::new(scores)
}

/// Retained eigenvalues as fractions of the total variance at fit time.
pub fn explained_variance(model: &PcaModel) -> Vec<f64> {
    if model.total_variance <= 0.0 {
        return vec![0.0; model.k()];
    }
    model
        .eigenvalues
        .iter()
        .map(|l| l / model.total_variance)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DataMatrix {
        let values = (0..rows * cols)
            .map(|_| StandardNormal.sample(rng))
            .collect();
        DataMatrix::new(rows, cols, values).unwrap()
    }

    #[test]
    fn one_dimensional_data() {
        let x = DataMatrix::from_rows(&[[-2.0, 0.0], [2.0, 0.0], [-1.0, 0.0], [1.0, 0.0]]).unwrap();
        let m = fit_pca(&x, ComponentSelection::Fixed(1), false).unwrap();
        assert_eq!(m.components.column(0), vec![1.0, 0.0]);
        // sample variance of x: (4 + 4 + 1 + 1) / 3
        assert!((m.eigenvalues[0] - 10.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn dropped_direction_scores_its_squared_length() {
        let x = DataMatrix::from_rows(&[[-2.0, 0.0], [2.0, 0.0]]).unwrap();
        let m = fit_pca(&x, ComponentSelection::Fixed(1), false).unwrap();
        let s = pca_scores(&m, &DataMatrix::from_rows(&[[0.0, 3.0]]).unwrap()).unwrap();
        assert!((s.as_slice()[0] - 9.0).abs() < 1e-12);
    }

    #[test]
    fn full_variance_keeps_rank() {
        // rank 2 in 4 dimensions
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let coeffs = gaussian(30, 2, &mut rng);
        let basis = gaussian(2, 4, &mut rng);
        let x = coeffs.matmul(&basis).unwrap();
        let m = fit_pca(&x, ComponentSelection::VarianceTarget(1.0), false).unwrap();
        assert_eq!(m.k(), 2);
        let ev = explained_variance(&m);
        assert!((ev.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn planted_structure_is_found() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let coeffs = gaussian(40, 2, &mut rng);
        let basis = gaussian(2, 5, &mut rng);
        let noise = gaussian(40, 5, &mut rng);
        let mut x = coeffs.matmul(&basis).unwrap();
        for r in 0..40 {
            for c in 0..5 {
                x.set(r, c, x.get(r, c) + 0.05 * noise.get(r, c));
            }
        }
        let m = fit_pca(&x, ComponentSelection::VarianceTarget(0.95), false).unwrap();
        assert_eq!(m.k(), 2);
        let retained: f64 = explained_variance(&m).iter().sum();
        assert!(retained >= 0.95);
    }

    #[test]
    fn complete_basis_reconstructs_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = gaussian(25, 4, &mut rng);
        for standardized in [false, true] {
            let m = fit_pca(&x, ComponentSelection::Fixed(4), standardized).unwrap();
            let s = pca_scores(&m, &x).unwrap();
            assert!(s.iter().all(|v| v < 1e-10));
        }
    }

    #[test]
    fn isotropic_and_rank_one_spectra() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = gaussian(4000, 2, &mut rng);
        let m = fit_pca(&x, ComponentSelection::Fixed(2), false).unwrap();
        let ev = explained_variance(&m);
        assert!((ev[0] - 0.5).abs() < 0.05 && (ev[1] - 0.5).abs() < 0.05);

        let t: Vec<[f64; 3]> = (0..10).map(|i| [i as f64, 2.0 * i as f64, -(i as f64)]).collect();
        let m = fit_pca(&DataMatrix::from_rows(&t).unwrap(), ComponentSelection::Fixed(3), false).unwrap();
        let ev = explained_variance(&m);
        assert!((ev[0] - 1.0).abs() < 1e-12);
        assert!(ev[1].abs() < 1e-12 && ev[2].abs() < 1e-12);
    }

    #[test]
    fn planted_spectrum_fractions() {
        // covariance diag(4, 1) rotated by 30 degrees
        let mut rng = ChaCha8Rng::seed_from_u64(500);
        let (c, s) = (30f64.to_radians().cos(), 30f64.to_radians().sin());
        let rows: Vec<[f64; 2]> = (0..500)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let a = 2.0 * a;
                let b: f64 = StandardNormal.sample(&mut rng);
                [c * a - s * b, s * a + c * b]
            })
            .collect();
        let m = fit_pca(&DataMatrix::from_rows(&rows).unwrap(), ComponentSelection::Fixed(2), false).unwrap();
        let ev = explained_variance(&m);
        assert!((ev[0] - 0.8).abs() < 0.05, "{ev:?}");
        assert!((ev[1] - 0.2).abs() < 0.05, "{ev:?}");
    }

    #[test]
    fn fit_errors() {
        let one = DataMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(matches!(
            fit_pca(&one, ComponentSelection::Fixed(1), false),
            Err(Error::Degenerate(_))
        ));
        let x = DataMatrix::from_rows(&[[1.0, 2.0], [3.0, 5.0], [0.0, 1.0]]).unwrap();
        for tau in [0.0, 1.5, -0.2] {
            assert!(matches!(
                fit_pca(&x, ComponentSelection::VarianceTarget(tau), false),
                Err(Error::Parameter(_))
            ));
        }
        assert!(fit_pca(&x, ComponentSelection::Fixed(3), false).is_err());
        let constant = DataMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(matches!(
            fit_pca(&constant, ComponentSelection::Fixed(1), false),
            Err(Error::Degenerate(_))
        ));
        let m = fit_pca(&x, ComponentSelection::Fixed(1), false).unwrap();
        assert!(matches!(
            pca_scores(&m, &DataMatrix::zeros(1, 3)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn projection_is_idempotent_and_pythagorean() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = gaussian(60, 6, &mut rng);
        let m = fit_pca(&x, ComponentSelection::Fixed(3), true).unwrap();
        let z = m.to_working_space(&x).unwrap();
        let scores = pca_scores(&m, &x).unwrap();
        for (r, row) in z.row_iter().enumerate() {
            let once = m.project_row(row);
            let twice = m.project_row(&once);
            for (a, b) in once.iter().zip(&twice) {
                assert!((a - b).abs() < 1e-10);
            }
            let total = dot(row, row);
            let kept = dot(&once, &once);
            assert!((total - kept - scores.as_slice()[r]).abs() < 1e-8);
        }
    }

    #[test]
    fn more_components_never_raise_a_score() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x = gaussian(50, 5, &mut rng);
        let probe = gaussian(10, 5, &mut rng);
        let mut previous: Option<AnomalyScores> = None;
        for k in 1..=5 {
            let m = fit_pca(&x, ComponentSelection::Fixed(k), false).unwrap();
            let s = pca_scores(&m, &probe).unwrap();
            if let Some(p) = &previous {
                for (a, b) in s.iter().zip(p.iter()) {
                    assert!(a <= b + 1e-10);
                }
            }
            previous = Some(s);
        }
    }

    #[test]
    fn components_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let x = gaussian(30, 7, &mut rng);
        let m = fit_pca(&x, ComponentSelection::Fixed(4), true).unwrap();
        let gram = m.components.transpose().matmul(&m.components).unwrap();
        assert!(gram.sub(&DataMatrix::identity(4)).unwrap().max_abs() < 1e-10);
        assert!(m.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        assert!(m.eigenvalues.iter().all(|&l| l >= -1e-10));
    }
}
