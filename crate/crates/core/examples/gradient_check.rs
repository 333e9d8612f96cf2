//! Compares backpropagated gradients with central finite differences.

use recon_detect::autoencoder::{backward, build_autoencoder, forward, loss, reconstruct, Activation, LossKind};
use recon_detect::linalg::DataMatrix;

fn main() -> recon_detect::Result<()> {
    let mut model = build_autoencoder(6, &[4], 2, Activation::Sigmoid, Activation::Linear, 3)?;
    let x = DataMatrix::new(4, 6, (0..24).map(|i| ((i * 7) % 11) as f64 / 11.0 - 0.5).collect())?;
    let h = 1e-5;
    for kind in [LossKind::Mse, LossKind::Mae] {
        let (_, cache) = forward(&model, &x)?;
        let analytic = backward(&model, &cache, &x, kind)?.flatten();
        let base = model.parameters();
        let mut worst: f64 = 0.0;
        for i in 0..base.len() {
            let mut p = base.clone();
            p[i] += h;
            model.set_parameters(&p)?;
            let up = loss(&x, &reconstruct(&model, &x)?, kind)?;
            p[i] = base[i] - h;
            model.set_parameters(&p)?;
            let down = loss(&x, &reconstruct(&model, &x)?, kind)?;
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max((analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-6));
        }
        model.set_parameters(&base)?;
        println!("{kind}: {} parameters, max relative error {worst:.2e}", base.len());
    }
    Ok(())
}
