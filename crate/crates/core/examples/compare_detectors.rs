//! Compares PCA and the autoencoder on the same test rows, first with each
//! model's own threshold, then with the autoencoder's threshold moved to
//! match the PCA mislabel rate.

use recon_detect::data::{generate_synthetic, GeneratorSpec};
use recon_detect::detector::{compare, derive_threshold, evaluate, ThresholdMethod};
use recon_detect::pca::ComponentSelection;
use recon_detect::pipeline::{
    class_scores, evaluate_partitions, fit_pca_detector, partition, train_autoencoder_detector,
    AutoencoderSettings, Detector, ThresholdRule,
};
use recon_detect::preprocess::SplitSpec;

fn main() -> recon_detect::Result<()> {
    let ds = generate_synthetic(&GeneratorSpec::default())?;
    let parts = partition(&ds, &SplitSpec::default())?;
    let (ae, _) = train_autoencoder_detector(&parts.train, &AutoencoderSettings::default())?;
    let ae = Detector::Autoencoder(ae);
    let pca = Detector::Pca(fit_pca_detector(&parts.train, ComponentSelection::Fixed(4), false)?);

    let rule = ThresholdRule::Derived(ThresholdMethod::MeanPlusKStd { k: 3.0 });
    let a = evaluate_partitions(&pca, &parts, &rule)?.test.expect("both classes in test");
    let b = evaluate_partitions(&ae, &parts, &rule)?.test.expect("both classes in test");
    print!("{}", compare("pca", &a, "autoencoder", &b)?.render_table());

    let s = class_scores(&ae, &parts.test)?;
    let rate = a.normal_mislabel_rate;
    let t = derive_threshold(&s.normal, ThresholdMethod::MatchedMislabel { rate }, "test_normal")?;
    let matched = evaluate(&s.normal, &s.anomaly, &t)?;
    println!("matched to pca mislabel rate {rate:.4}:");
    print!("{}", compare("pca", &a, "autoencoder", &matched)?.render_table());
    Ok(())
}
