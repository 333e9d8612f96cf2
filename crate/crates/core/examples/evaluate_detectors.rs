//! Trains both detectors, derives a threshold from training-normal scores
//! and prints the per-class report for the held-out rows.

use recon_detect::data::{generate_synthetic, GeneratorSpec};
use recon_detect::detector::ThresholdMethod;
use recon_detect::pca::ComponentSelection;
use recon_detect::pipeline::{
    evaluate_partitions, fit_pca_detector, partition, train_autoencoder_detector, AutoencoderSettings,
    Detector, ThresholdRule,
};
use recon_detect::preprocess::SplitSpec;

fn main() -> recon_detect::Result<()> {
    let ds = generate_synthetic(&GeneratorSpec::default())?;
    let parts = partition(&ds, &SplitSpec::default())?;

    let (ae, _) = train_autoencoder_detector(&parts.train, &AutoencoderSettings::default())?;
    let pca = fit_pca_detector(&parts.train, ComponentSelection::Fixed(4), false)?;

    let rules = [
        ThresholdRule::default(),
        ThresholdRule::Derived(ThresholdMethod::Percentile { p: 99.9 }),
    ];
    for det in [Detector::Autoencoder(ae), Detector::Pca(pca)] {
        for rule in &rules {
            let ev = evaluate_partitions(&det, &parts, rule)?;
            if let Some(test) = ev.test {
                print!("{}", test.render_table(&format!("{} on test rows", det.kind())));
            }
        }
    }
    Ok(())
}
