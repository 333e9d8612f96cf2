//! Trains the default 20 -> 16 -> 8 -> 16 -> 20 autoencoder on legitimate
//! training rows and prints the loss curve.

use recon_detect::data::{generate_synthetic, GeneratorSpec};
use recon_detect::pipeline::{class_scores, partition, train_autoencoder_detector, AutoencoderSettings, Detector};
use recon_detect::preprocess::SplitSpec;

fn main() -> recon_detect::Result<()> {
    let ds = generate_synthetic(&GeneratorSpec::default())?;
    let parts = partition(&ds, &SplitSpec::default())?;
    let settings = AutoencoderSettings::default();
    let (detector, history) = train_autoencoder_detector(&parts.train, &settings)?;

    println!("widths {:?}, {} parameters", detector.model.widths(), detector.model.n_params());
    for r in history.records.iter().filter(|r| r.epoch % 10 == 1 || r.epoch == history.best_epoch) {
        println!(
            "epoch {:>3}  train {:.5}  val {:.5}",
            r.epoch,
            r.train_loss,
            r.val_loss.unwrap_or(f64::NAN)
        );
    }
    println!(
        "stopped after {} epochs, best epoch {}",
        history.epochs_run(),
        history.best_epoch
    );

    let s = class_scores(&Detector::Autoencoder(detector), &parts.test)?;
    println!(
        "test median score: normal {:.5}, fraud {:.5}",
        s.normal.median().unwrap_or(0.0),
        s.anomaly.median().unwrap_or(0.0)
    );
    Ok(())
}
