//! Reconstruction-error anomaly detection for imbalanced transaction data.
//!
//! Two unsupervised detectors are fitted on legitimate rows only and score
//! every row by how badly they reconstruct it:
//!
//! - [`autoencoder`]: a dense autoencoder written from scratch (forward pass,
//!   backpropagation, Adam, early stopping).
//! - [`pca`]: principal components of the legitimate rows' covariance, from
//!   a Jacobi eigensolver in [`linalg`].
//!
//! [`detector`] turns scores into thresholded counts and per-class rates,
//! [`data`] reads and writes CSV and generates seeded synthetic data, and
//! [`preprocess`] holds the split and scaling steps. The `recon` binary
//! wires everything together; see [`cli`].

pub mod autoencoder;
pub mod cli;
pub mod data;
pub mod detector;
pub mod error;
pub mod linalg;
pub mod model_file;
pub mod pca;
pub mod pipeline;
pub mod preprocess;
pub mod scores;

pub use error::{Error, Result};
pub use linalg::DataMatrix;
pub use scores::AnomalyScores;
