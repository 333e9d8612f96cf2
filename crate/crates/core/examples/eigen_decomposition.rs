//! Jacobi eigendecomposition of a sample covariance matrix.

use recon_detect::linalg::{covariance_matrix, dot, eigh_symmetric, DataMatrix};

fn main() -> recon_detect::Result<()> {
    let x = DataMatrix::from_rows(&[
        [2.5, 2.4, 0.5],
        [0.5, 0.7, 1.1],
        [2.2, 2.9, 0.4],
        [1.9, 2.2, 0.9],
        [3.1, 3.0, 0.2],
        [2.3, 2.7, 0.8],
        [2.0, 1.6, 1.0],
        [1.0, 1.1, 1.2],
    ])?;
    let s = covariance_matrix(&x)?;
    let e = eigh_symmetric(&s)?;
    for (i, lambda) in e.eigenvalues.iter().enumerate() {
        let v = e.eigenvector(i);
        let residual = (0..s.rows())
            .map(|r| (dot(s.row(r), &v) - lambda * v[r]).abs())
            .fold(0.0, f64::max);
        println!("lambda {lambda:>9.5}  v {v:>8.4?}  residual {residual:.1e}");
    }
    println!(
        "trace {:.6} = sum of eigenvalues {:.6}",
        s.trace(),
        e.eigenvalues.iter().sum::<f64>()
    );
    Ok(())
}
