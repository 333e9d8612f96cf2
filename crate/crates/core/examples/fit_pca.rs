//! Fits PCA to legitimate rows, both by a fixed k and by a variance target,
//! and prints the explained-variance table.

use recon_detect::data::{generate_synthetic, GeneratorSpec};
use recon_detect::pca::{explained_variance, ComponentSelection};
use recon_detect::pipeline::{fit_pca_detector, partition};
use recon_detect::preprocess::SplitSpec;

fn main() -> recon_detect::Result<()> {
    let ds = generate_synthetic(&GeneratorSpec::default())?;
    let parts = partition(&ds, &SplitSpec::default())?;

    let full = fit_pca_detector(&parts.train, ComponentSelection::Fixed(ds.n_features()), false)?;
    let mut cumulative = 0.0;
    println!("component  eigenvalue  explained  cumulative");
    for (j, (l, r)) in full.eigenvalues.iter().zip(explained_variance(&full)).enumerate() {
        cumulative += r;
        println!("{:>9}  {l:>10.4}  {r:>9.4}  {cumulative:>10.4}", j + 1);
    }

    for tau in [0.8, 0.9, 0.95] {
        let m = fit_pca_detector(&parts.train, ComponentSelection::VarianceTarget(tau), false)?;
        println!("variance target {tau}: k = {}", m.k());
    }
    Ok(())
}
