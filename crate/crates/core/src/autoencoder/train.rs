use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{adam_step, backward, forward, loss, reconstruct, AdamState, AutoencoderModel, LossKind};
use crate::data::fmt_f64;
use crate::error::{Error, Result};
use crate::linalg::DataMatrix;
use crate::preprocess::shuffle_in_place;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Epochs without validation improvement tolerated before stopping.
    pub patience: usize,
    pub min_delta: f64,
    pub seed: u64,
    pub loss: LossKind,
    /// Tail of the shuffled training rows held out for early stopping.
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 100,
            batch_size: 32,
            patience: 10,
            min_delta: 0.0,
            seed: 111,
            loss: LossKind::Mae,
            validation_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Parameter(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Parameter("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Parameter("batch size must be at least 1".into()));
        }
        if !(self.min_delta.is_finite() && self.min_delta >= 0.0) {
            return Err(Error::Parameter(format!(
                "min_delta must be non-negative, got {}",
                self.min_delta
            )));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Parameter(format!(
                "validation fraction must be in (0, 1), got {}",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Patience-based early stopping on a validation loss.
///
/// An epoch improves when its loss is below `best - min_delta`; training
/// stops once `patience` consecutive epochs fail to improve.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    min_delta: f64,
    best: f64,
    best_epoch: Option<usize>,
    wait: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize, min_delta: f64) -> Self {
        Self {
            patience,
            min_delta,
            best: f64::INFINITY,
            best_epoch: None,
            wait: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> StopDecision {
        if val_loss < self.best - self.min_delta {
            self.best = val_loss;
            self.best_epoch = Some(epoch);
            self.wait = 0;
            return StopDecision::Improved;
        }
        self.wait += 1;
        if self.wait >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingHistory {
    pub records: Vec<EpochRecord>,
    /// Epoch whose parameters the returned model carries.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainingHistory {
    pub fn epochs_run(&self) -> usize {
        self.records.len()
    }

    pub fn best_val_loss(&self) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.epoch == self.best_epoch)
            .and_then(|r| r.val_loss)
    }

    pub fn final_train_loss(&self) -> Option<f64> {
        self.records.last().map(|r| r.train_loss)
    }

    /// `epoch,train_loss,val_loss` with one line per epoch run.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss\n");
        for r in &self.records {
            let val = r.val_loss.map(fmt_f64).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", r.epoch, fmt_f64(r.train_loss), val));
        }
        out
    }
}

fn run_epoch(
    model: &mut AutoencoderModel,
    x: &DataMatrix,
    order: &mut [usize],
    rng: &mut ChaCha8Rng,
    adam: &mut AdamState,
    config: &TrainConfig,
    epoch: usize,
) -> Result<()> {
    shuffle_in_place(order, rng);
    let mut params = model.parameters();
    for batch in order.chunks(config.batch_size) {
        let xb = x.select_rows(batch);
        let (_, cache) = forward(model, &xb)?;
        let grads = backward(model, &cache, &xb, config.loss)?.flatten();
        adam_step(&mut params, &grads, adam, config.learning_rate)?;
        if let Some(bad) = params.iter().find(|p| !p.is_finite()) {
            return Err(Error::Divergence { epoch, loss: *bad });
        }
        model.set_parameters(&params)?;
    }
    Ok(())
}

fn epoch_loss(model: &AutoencoderModel, x: &DataMatrix, kind: LossKind, epoch: usize) -> Result<f64> {
    let l = loss(x, &reconstruct(model, x)?, kind)?;
    if !l.is_finite() {
        return Err(Error::Divergence { epoch, loss: l });
    }
    Ok(l)
}

/// Mini-batch Adam on `x`, early-stopped on a held-out tail of the shuffled
/// rows. The returned model carries the parameters of the best validation
/// epoch.
pub fn train(
    mut model: AutoencoderModel,
    x: &DataMatrix,
    config: &TrainConfig,
) -> Result<(AutoencoderModel, TrainingHistory)> {
    config.validate()?;
    if x.rows() < 2 {
        return Err(Error::Degenerate(format!(
            "training needs at least 2 rows to hold out validation data, got {}",
            x.rows()
        )));
    }
    if x.cols() != model.input_dim() {
        return Err(Error::Shape(format!(
            "model expects {} features, got {}",
            model.input_dim(),
            x.cols()
        )));
    }
    let n = x.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut perm: Vec<usize> = (0..n).collect();
    shuffle_in_place(&mut perm, &mut rng);
    let n_val = ((n as f64 * config.validation_fraction).round() as usize).clamp(1, n - 1);
    let x_train = x.select_rows(&perm[..n - n_val]);
    let x_val = x.select_rows(&perm[n - n_val..]);

    let mut order: Vec<usize> = (0..x_train.rows()).collect();
    let mut adam = AdamState::new(model.n_params());
    let mut stopper = EarlyStopping::new(config.patience, config.min_delta);
    let mut best_params = model.parameters();
    let mut records = Vec::new();
    let mut stopped_early = false;

    for epoch in 1..=config.epochs {
        run_epoch(&mut model, &x_train, &mut order, &mut rng, &mut adam, config, epoch)?;
        let train_loss = epoch_loss(&model, &x_train, config.loss, epoch)?;
        let val_loss = epoch_loss(&model, &x_val, config.loss, epoch)?;
        records.push(EpochRecord {
            epoch,
            train_loss,
            val_loss: Some(val_loss),
        });
        match stopper.observe(epoch, val_loss) {
            StopDecision::Improved => best_params = model.parameters(),
            StopDecision::Continue => {}
            StopDecision::Stop => {
                stopped_early = epoch < config.epochs;
                break;
            }
        }
    }
    model.set_parameters(&best_params)?;
    let best_epoch = stopper.best_epoch().unwrap_or(0);
    Ok((
        model,
        TrainingHistory {
            records,
            best_epoch,
            stopped_early,
        },
    ))
}

/// Mini-batch Adam on every row of `x` for exactly `config.epochs` epochs,
/// with no validation split and no early stopping. `validation_fraction`
/// and `patience` are ignored.
pub fn train_without_holdout(
    mut model: AutoencoderModel,
    x: &DataMatrix,
    config: &TrainConfig,
) -> Result<(AutoencoderModel, TrainingHistory)> {
    config.validate()?;
    if x.rows() == 0 {
        return Err(Error::Degenerate("cannot train on zero rows".into()));
    }
    if x.cols() != model.input_dim() {
        return Err(Error::Shape(format!(
            "model expects {} features, got {}",
            model.input_dim(),
            x.cols()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut adam = AdamState::new(model.n_params());
    let mut records = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        run_epoch(&mut model, x, &mut order, &mut rng, &mut adam, config, epoch)?;
        records.push(EpochRecord {
            epoch,
            train_loss: epoch_loss(&model, x, config.loss, epoch)?,
            val_loss: None,
        });
    }
    Ok((
        model,
        TrainingHistory {
            records,
            best_epoch: config.epochs,
            stopped_early: false,
        },
    ))
}
