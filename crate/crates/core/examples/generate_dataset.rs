//! Generates the synthetic transaction set and writes it as CSV.
//!
//! cargo run --example generate_dataset -- [out.csv]

use recon_detect::data::{generate_synthetic_with_truth, save_csv, GeneratorSpec};
use recon_detect::linalg::dot;

fn main() -> recon_detect::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().join("recon_synthetic.csv").to_string_lossy().into_owned());
    let spec = GeneratorSpec::default();
    let (ds, truth) = generate_synthetic_with_truth(&spec)?;
    save_csv(&ds, &out)?;

    println!("{} rows, {} features -> {out}", ds.len(), ds.n_features());
    println!("normal {}  fraud {}", ds.count_label(0), ds.count_label(1));
    let overlap: f64 = (0..spec.latent_dim)
        .map(|j| dot(&truth.loadings.column(j), &truth.fraud_direction).abs())
        .fold(0.0, f64::max);
    println!("fraud direction vs loadings, max |cos|: {overlap:.1e}");
    Ok(())
}
