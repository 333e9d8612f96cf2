//! End-to-end detector pipelines: split, scale, fit on legitimate rows,
//! score partitions and evaluate them.

use crate::autoencoder::{self, build_autoencoder, Activation, AutoencoderModel, LossKind, TrainConfig, TrainingHistory};
use crate::data::LabeledDataset;
use crate::detector::{derive_threshold, evaluate, EvaluationReport, Threshold, ThresholdMethod};
use crate::error::{Error, Result};
use crate::linalg::DataMatrix;
use crate::pca::{self, ComponentSelection, PcaModel};
use crate::preprocess::{split_by_class, train_test_split, MinMaxScaler, SplitSpec};
use crate::scores::AnomalyScores;

/// An autoencoder plus the input scaling and loss it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderDetector {
    pub scaler: Option<MinMaxScaler>,
    pub model: AutoencoderModel,
    pub loss: LossKind,
}

impl AutoencoderDetector {
    pub fn score(&self, x: &DataMatrix) -> Result<AnomalyScores> {
        match &self.scaler {
            Some(s) => autoencoder::score(&self.model, &s.transform(x)?, self.loss),
            None => autoencoder::score(&self.model, x, self.loss),
        }
    }
}

/// Either fitted detector, scoring raw feature rows.
#[derive(Debug, Clone, PartialEq)]
pub enum Detector {
    Autoencoder(AutoencoderDetector),
    Pca(PcaModel),
}

impl Detector {
    pub fn score(&self, x: &DataMatrix) -> Result<AnomalyScores> {
        match self {
            Detector::Autoencoder(d) => d.score(x),
            Detector::Pca(m) => pca::pca_scores(m, x),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Detector::Autoencoder(d) => d.model.input_dim(),
            Detector::Pca(m) => m.n_features(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Detector::Autoencoder(_) => "autoencoder",
            Detector::Pca(_) => "pca",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderSettings {
    pub hidden_widths: Vec<usize>,
    pub bottleneck: usize,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    /// Min-max scale inputs with extrema of the whole training partition.
    pub minmax: bool,
    pub train: TrainConfig,
}

impl Default for AutoencoderSettings {
    fn default() -> Self {
        Self {
            hidden_widths: vec![16],
            bottleneck: 8,
            hidden_activation: Activation::Relu,
            output_activation: Activation::Sigmoid,
            minmax: true,
            train: TrainConfig::default(),
        }
    }
}

/// Fits the scaler on every training row, then trains on the scaled
/// legitimate rows only.
pub fn train_autoencoder_detector(
    train: &LabeledDataset,
    settings: &AutoencoderSettings,
) -> Result<(AutoencoderDetector, TrainingHistory)> {
    if train.is_empty() {
        return Err(Error::Degenerate("training partition is empty".into()));
    }
    let scaler = if settings.minmax {
        Some(MinMaxScaler::fit(&train.features)?)
    } else {
        None
    };
    let (legit, _) = split_by_class(train)?;
    let legit = match &scaler {
        Some(s) => s.transform(&legit)?,
        None => legit,
    };
    let model = build_autoencoder(
        train.n_features(),
        &settings.hidden_widths,
        settings.bottleneck,
        settings.hidden_activation,
        settings.output_activation,
        settings.train.seed,
    )?;
    let (model, history) = autoencoder::train(model, &legit, &settings.train)?;
    Ok((
        AutoencoderDetector {
            scaler,
            model,
            loss: settings.train.loss,
        },
        history,
    ))
}

/// Fits PCA to the legitimate rows of the training partition.
pub fn fit_pca_detector(
    train: &LabeledDataset,
    selection: ComponentSelection,
    standardized: bool,
) -> Result<PcaModel> {
    let (legit, _) = split_by_class(train)?;
    pca::fit_pca(&legit, selection, standardized)
}

/// Scores of one partition split by true class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScores {
    pub normal: AnomalyScores,
    pub anomaly: AnomalyScores,
}

pub fn class_scores(detector: &Detector, dataset: &LabeledDataset) -> Result<ClassScores> {
    let (legit, fraud) = split_by_class(dataset)?;
    Ok(ClassScores {
        normal: detector.score(&legit)?,
        anomaly: detector.score(&fraud)?,
    })
}

/// Train and test partitions of a labeled dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Partitions {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

pub fn partition(dataset: &LabeledDataset, split: &SplitSpec) -> Result<Partitions> {
    let (train, test) = train_test_split(dataset, split)?;
    Ok(Partitions { train, test })
}

/// How to turn training-normal scores into a threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    Manual(f64),
    Derived(ThresholdMethod),
}

impl Default for ThresholdRule {
    fn default() -> Self {
        ThresholdRule::Derived(ThresholdMethod::MeanPlusKStd { k: 1.0 })
    }
}

impl ThresholdRule {
    pub fn resolve(&self, train_normal: &AnomalyScores) -> Result<Threshold> {
        match *self {
            ThresholdRule::Manual(v) => Threshold::manual(v),
            ThresholdRule::Derived(m) => derive_threshold(train_normal, m, "train_normal"),
        }
    }
}

/// Evaluation of one detector on both partitions with a threshold derived
/// from its training-normal scores.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionEvaluation {
    pub threshold: Threshold,
    pub train_scores: ClassScores,
    pub test_scores: Option<ClassScores>,
    pub train: EvaluationReport,
    /// `None` when the test partition lacks one of the classes.
    pub test: Option<EvaluationReport>,
}

pub fn evaluate_partitions(
    detector: &Detector,
    parts: &Partitions,
    rule: &ThresholdRule,
) -> Result<PartitionEvaluation> {
    let train_scores = class_scores(detector, &parts.train)?;
    let threshold = rule.resolve(&train_scores.normal)?;
    let train = evaluate(&train_scores.normal, &train_scores.anomaly, &threshold)?;
    let (test_scores, test) = if parts.test.is_empty() {
        (None, None)
    } else {
        let s = class_scores(detector, &parts.test)?;
        let r = if s.normal.is_empty() || s.anomaly.is_empty() {
            None
        } else {
            Some(evaluate(&s.normal, &s.anomaly, &threshold)?)
        };
        (Some(s), r)
    };
    Ok(PartitionEvaluation {
        threshold,
        train_scores,
        test_scores,
        train,
        test,
    })
}
