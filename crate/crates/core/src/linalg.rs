//! Dense row-major matrices, sample covariance and a cyclic Jacobi
//! eigensolver for symmetric matrices.
//!
//! Every reduction accumulates left to right over its index so identical
//! inputs produce bit-identical outputs.

use std::fmt;

use crate::error::{Error, Result};

/// Dense row-major matrix of finite `f64` values.
#[derive(Clone, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl fmt::Debug for DataMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DataMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl DataMatrix {
    /// Builds a matrix from row-major values, rejecting wrong lengths and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: i / cols.max(1),
                col: i % cols.max(1),
            });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.values[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.values[i * n + i] = d;
        }
        m
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Shape(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, values)
    }

    /// Builds a `rows x cols` matrix with no rows but a known column count.
    pub fn empty(cols: usize) -> Self {
        Self::zeros(0, cols)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.values[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |r| self.row(r))
    }

    /// Copies the listed rows, in the listed order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            values,
        }
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &DataMatrix) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::Shape(format!(
                "cannot stack {} columns on {} columns",
                other.cols, self.cols
            )));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            values,
        })
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.values[c * self.rows + r] = self.values[r * self.cols + c];
            }
        }
        out
    }

    /// Matrix product; the inner dimension is summed left to right.
    pub fn matmul(&self, rhs: &DataMatrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let lhs_row = self.row(i);
            for j in 0..rhs.cols {
                let mut acc = 0.0;
                for (k, &a) in lhs_row.iter().enumerate() {
                    acc += a * rhs.values[k * rhs.cols + j];
                }
                out.values[i * rhs.cols + j] = acc;
            }
        }
        Ok(out)
    }

    /// Subtracts `v` from every row.
    pub fn row_sub(&self, v: &[f64]) -> Result<Self> {
        if v.len() != self.cols {
            return Err(Error::Shape(format!(
                "vector of length {} does not match {} columns",
                v.len(),
                self.cols
            )));
        }
        let mut out = self.clone();
        for r in 0..self.rows {
            for (x, &m) in out.row_mut(r).iter_mut().zip(v) {
                *x -= m;
            }
        }
        Ok(out)
    }

    /// Per-column arithmetic mean. Empty matrices yield zeros.
    pub fn column_means(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for row in self.row_iter() {
            for (s, &x) in sums.iter_mut().zip(row) {
                *s += x;
            }
        }
        if self.rows > 0 {
            let n = self.rows as f64;
            sums.iter_mut().for_each(|s| *s /= n);
        }
        sums
    }

    /// Largest absolute entry (∞-norm of the flattened values).
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Element-wise difference `self - rhs`.
    pub fn sub(&self, rhs: &DataMatrix) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(Error::Shape(format!(
                "cannot subtract {:?} from {:?}",
                rhs.shape(),
                self.shape()
            )));
        }
        let values = self
            .values
            .iter()
            .zip(&rhs.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            values,
        })
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Largest |a_ij - a_ji|.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Sample covariance with the `n - 1` divisor. The upper triangle is
/// computed and mirrored, so the result is exactly symmetric.
pub fn covariance_matrix(x: &DataMatrix) -> Result<DataMatrix> {
    if x.rows() < 2 {
        return Err(Error::Degenerate(format!(
            "covariance needs at least 2 rows, got {}",
            x.rows()
        )));
    }
    let d = x.cols();
    let means = x.column_means();
    let centered = x.row_sub(&means)?;
    let denom = (x.rows() - 1) as f64;
    let mut cov = DataMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let mut acc = 0.0;
            for row in centered.row_iter() {
                acc += row[i] * row[j];
            }
            let v = acc / denom;
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    Ok(cov)
}

/// Eigenpairs of a symmetric matrix, sorted by non-increasing eigenvalue.
///
/// Column `i` of `eigenvectors` pairs with `eigenvalues[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DataMatrix,
}

impl EigenDecomposition {
    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        self.eigenvectors.column(i)
    }
}

/// Off-diagonal Frobenius norm at which Jacobi sweeps stop, relative to
/// `max(1, ‖S‖_F)`.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
/// Sweep cap for the Jacobi iteration.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Largest `|s_ij - s_ji|` accepted as symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Diagonalizes a symmetric matrix with cyclic Jacobi rotations.
///
/// Eigenvalues come back in non-increasing order (ties keep their diagonal
/// order) and each eigenvector is signed so that its entry of largest
/// magnitude is non-negative, the lowest index winning ties.
pub fn eigh_symmetric(s: &DataMatrix) -> Result<EigenDecomposition> {
    if !s.is_square() {
        return Err(Error::Shape(format!(
            "eigensolver needs a square matrix, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    let asym = s.asymmetry();
    if asym > SYMMETRY_TOLERANCE {
        return Err(Error::Shape(format!(
            "matrix is not symmetric (max asymmetry {asym:e})"
        )));
    }
    let n = s.rows();
    // work on the symmetrized copy so rounding in the input cannot bias rotations
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = if i == j {
                s.get(i, i)
            } else {
                0.5 * (s.get(i, j) + s.get(j, i))
            };
        }
    }
    let mut v = DataMatrix::identity(n).into_values();
    let stop = JACOBI_TOLERANCE * s.frobenius_norm().max(1.0);

    let off_norm = |a: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += a[i * n + j] * a[i * n + j];
                }
            }
        }
        acc.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&a);
        if off <= stop {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::Convergence {
                sweeps,
                off_norm: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    0.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                // A <- A J
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - sn * akq;
                    a[k * n + q] = sn * akp + c * akq;
                }
                // A <- Jᵀ A
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - sn * aqk;
                    a[q * n + k] = sn * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                // V <- V J
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - sn * vkq;
                    v[k * n + q] = sn * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep their diagonal order
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = DataMatrix::zeros(n, n);
    for (out_col, &src) in order.iter().enumerate() {
        let mut col: Vec<f64> = (0..n).map(|k| v[k * n + src]).collect();
        canonicalize_sign(&mut col);
        for (k, x) in col.into_iter().enumerate() {
            vectors.set(k, out_col, x);
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors: vectors,
    })
}

/// Flips `v` so its largest-magnitude entry (lowest index on ties) is
/// non-negative.
pub fn canonicalize_sign(v: &mut [f64]) {
    let mut pivot = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[pivot].abs() {
            pivot = i;
        }
    }
    if v.get(pivot).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
