//! Sweeps the threshold across the PCA score range and writes the score
//! histogram, the data behind a mislabel-versus-capture plot.

use recon_detect::data::{generate_synthetic, write_atomic, GeneratorSpec};
use recon_detect::detector::{histogram, histogram_csv, threshold_sweep};
use recon_detect::pca::ComponentSelection;
use recon_detect::pipeline::{class_scores, fit_pca_detector, partition, Detector};
use recon_detect::preprocess::SplitSpec;

fn main() -> recon_detect::Result<()> {
    let ds = generate_synthetic(&GeneratorSpec::default())?;
    let parts = partition(&ds, &SplitSpec::default())?;
    let pca = Detector::Pca(fit_pca_detector(&parts.train, ComponentSelection::Fixed(4), false)?);
    let s = class_scores(&pca, &ds)?;

    println!("{:>10}  {:>10}  {:>10}", "threshold", "mislabel", "capture");
    for r in threshold_sweep(&s.normal, &s.anomaly, 20)? {
        println!(
            "{:>10.3}  {:>10.4}  {:>10.4}",
            r.threshold.value, r.normal_mislabel_rate, r.fraud_capture_rate
        );
    }

    let path = std::env::temp_dir().join("recon_histogram.csv");
    write_atomic(&path, histogram_csv(&histogram(&s.normal, &s.anomaly, 50)).as_bytes())?;
    println!("histogram -> {}", path.display());
    Ok(())
}
