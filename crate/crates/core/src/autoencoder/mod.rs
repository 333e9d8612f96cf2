//! Dense autoencoder built from scratch: layers, forward pass, reconstruction
//! losses, exact backpropagation, Adam and early-stopped training.
//!
//! Layers hold `W` as an `out x in` matrix, so a layer computes
//! `act(W a + b)` for each input row `a`. The encoder narrows the width down
//! to the bottleneck and the decoder mirrors it back out.

mod adam;
mod train;

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::Hasher;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use adam::{adam_step, AdamState};
pub use train::{
    train, train_without_holdout, EarlyStopping, EpochRecord, StopDecision, TrainConfig,
    TrainingHistory,
};

use crate::error::{Error, Result};
use crate::linalg::DataMatrix;
use crate::scores::AnomalyScores;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Sigmoid,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Linear => z,
        }
    }

    /// Derivative with respect to the pre-activation `z`, given the output
    /// `a = apply(z)`. ReLU uses 0 at the kink.
    #[inline]
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Linear => 1.0,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Linear => "linear",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::Parameter(format!("unknown activation {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    Mae,
    Mse,
}

impl LossKind {
    pub fn tag(self) -> &'static str {
        match self {
            LossKind::Mae => "mae",
            LossKind::Mse => "mse",
        }
    }

    #[inline]
    fn elementwise(self, residual: f64) -> f64 {
        match self {
            LossKind::Mae => residual.abs(),
            LossKind::Mse => residual * residual,
        }
    }

    /// d/dr of the elementwise loss at residual `r = x' - x`; the MAE
    /// subgradient at 0 is 0.
    #[inline]
    fn elementwise_grad(self, residual: f64) -> f64 {
        match self {
            LossKind::Mae => {
                if residual > 0.0 {
                    1.0
                } else if residual < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            LossKind::Mse => 2.0 * residual,
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mae" => Ok(LossKind::Mae),
            "mse" => Ok(LossKind::Mse),
            other => Err(Error::Parameter(format!("unknown loss {other:?}"))),
        }
    }
}

/// One fully connected layer: `act(W a + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `out_dim x in_dim`.
    pub weights: DataMatrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: DataMatrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::Shape(format!(
                "bias of length {} for a layer with {} outputs",
                bias.len(),
                weights.rows()
            )));
        }
        if bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::Parameter("non-finite bias".into()));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn n_params(&self) -> usize {
        self.weights.rows() * self.weights.cols() + self.bias.len()
    }

    fn glorot(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let values = (0..in_dim * out_dim)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        Self {
            weights: DataMatrix::new(out_dim, in_dim, values).expect("finite init"),
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    /// Pre-activations and activations for every row of `input`.
    fn forward(&self, input: &DataMatrix) -> (DataMatrix, DataMatrix) {
        let out_dim = self.out_dim();
        let mut pre = DataMatrix::zeros(input.rows(), out_dim);
        let mut post = DataMatrix::zeros(input.rows(), out_dim);
        for r in 0..input.rows() {
            let a = input.row(r);
            for o in 0..out_dim {
                let w = self.weights.row(o);
                let mut acc = 0.0;
                for (wk, ak) in w.iter().zip(a) {
                    acc += wk * ak;
                }
                let z = acc + self.bias[o];
                pre.set(r, o, z);
                post.set(r, o, self.activation.apply(z));
            }
        }
        (pre, post)
    }
}

/// Encoder layers followed by decoder layers.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderModel {
    layers: Vec<DenseLayer>,
    n_encoder: usize,
}

impl AutoencoderModel {
    /// Assembles a model from explicit layers, checking that widths chain,
    /// strictly narrow through the encoder and strictly widen through the
    /// decoder back to the input width.
    pub fn from_layers(encoder: Vec<DenseLayer>, decoder: Vec<DenseLayer>) -> Result<Self> {
        if decoder.is_empty() {
            return Err(Error::Architecture("decoder needs at least one layer".into()));
        }
        let n_encoder = encoder.len();
        let layers: Vec<DenseLayer> = encoder.into_iter().chain(decoder).collect();
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::Architecture(format!(
                    "layer output {} does not feed layer input {}",
                    pair[0].out_dim(),
                    pair[1].in_dim()
                )));
            }
        }
        let input_dim = layers[0].in_dim();
        if layers.last().map(DenseLayer::out_dim) != Some(input_dim) {
            return Err(Error::Architecture(
                "decoder output width must equal the input width".into(),
            ));
        }
        for (i, l) in layers.iter().enumerate() {
            let ok = if i < n_encoder {
                l.out_dim() < l.in_dim()
            } else {
                l.out_dim() > l.in_dim() || (n_encoder == 0 && layers.len() == 1)
            };
            if !ok {
                return Err(Error::Architecture(format!(
                    "layer {i} ({} -> {}) breaks the narrowing/widening order",
                    l.in_dim(),
                    l.out_dim()
                )));
            }
        }
        Ok(Self { layers, n_encoder })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn encoder(&self) -> &[DenseLayer] {
        &self.layers[..self.n_encoder]
    }

    pub fn decoder(&self) -> &[DenseLayer] {
        &self.layers[self.n_encoder..]
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn bottleneck_dim(&self) -> usize {
        self.decoder()[0].in_dim()
    }

    /// Layer widths from input to output, e.g. `[29, 16, 8, 16, 29]`.
    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(DenseLayer::out_dim))
            .collect()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(DenseLayer::n_params).sum()
    }

    /// All parameters in layer order, each layer's weights row-major then
    /// its bias.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(l.weights.values());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Inverse of [`AutoencoderModel::parameters`].
    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::Shape(format!(
                "{} parameters for a model with {}",
                params.len(),
                self.n_params()
            )));
        }
        let mut offset = 0;
        for l in &mut self.layers {
            let (rows, cols) = l.weights.shape();
            let nw = rows * cols;
            l.weights = DataMatrix::new(rows, cols, params[offset..offset + nw].to_vec())?;
            offset += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&params[offset..offset + nb]);
            offset += nb;
        }
        Ok(())
    }

    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for l in &self.layers {
            h.write_usize(l.in_dim());
            h.write_usize(l.out_dim());
            for v in l.weights.values().iter().chain(&l.bias) {
                h.write_u64(v.to_bits());
            }
        }
        h.finish()
    }

    fn check_input(&self, x: &DataMatrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "model expects {} features, got {}",
                self.input_dim(),
                x.cols()
            )));
        }
        Ok(())
    }
}

fn matrix_fingerprint(x: &DataMatrix) -> u64 {
    let mut h = DefaultHasher::new();
    h.write_usize(x.rows());
    h.write_usize(x.cols());
    for v in x.values() {
        h.write_u64(v.to_bits());
    }
    h.finish()
}

/// Builds a mirrored autoencoder with Glorot-uniform weights and zero
/// biases.
///
/// The encoder goes `input_dim -> hidden_widths... -> bottleneck`, each
/// layer using `hidden_act`; the decoder reverses the widths and uses
/// `output_act` on its last layer. With `input_dim == bottleneck` and no
/// hidden widths the model is a single `output_act` layer.
pub fn build_autoencoder(
    input_dim: usize,
    hidden_widths: &[usize],
    bottleneck: usize,
    hidden_act: Activation,
    output_act: Activation,
    seed: u64,
) -> Result<AutoencoderModel> {
    if bottleneck == 0 || input_dim < bottleneck {
        return Err(Error::Architecture(format!(
            "need input_dim >= bottleneck >= 1, got {input_dim} and {bottleneck}"
        )));
    }
    let chain: Vec<usize> = std::iter::once(input_dim)
        .chain(hidden_widths.iter().copied())
        .chain(std::iter::once(bottleneck))
        .collect();
    let degenerate = input_dim == bottleneck && hidden_widths.is_empty();
    if !degenerate && chain.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Architecture(format!(
            "widths must strictly decrease from input to bottleneck, got {chain:?}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if degenerate {
        let layer = DenseLayer::glorot(input_dim, input_dim, output_act, &mut rng);
        return AutoencoderModel::from_layers(Vec::new(), vec![layer]);
    }
    let encoder: Vec<DenseLayer> = chain
        .windows(2)
        .map(|w| DenseLayer::glorot(w[0], w[1], hidden_act, &mut rng))
        .collect();
    let reversed: Vec<usize> = chain.iter().rev().copied().collect();
    let n_dec = reversed.len() - 1;
    let decoder: Vec<DenseLayer> = reversed
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let act = if i + 1 == n_dec { output_act } else { hidden_act };
            DenseLayer::glorot(w[0], w[1], act, &mut rng)
        })
        .collect();
    AutoencoderModel::from_layers(encoder, decoder)
}

/// Per-layer pre-activations and activations from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pre: Vec<DataMatrix>,
    post: Vec<DataMatrix>,
    model_fingerprint: u64,
    input_fingerprint: u64,
}

impl ForwardCache {
    pub fn output(&self) -> &DataMatrix {
        self.post.last().expect("a model has at least one layer")
    }

    pub fn pre_activations(&self) -> &[DataMatrix] {
        &self.pre
    }

    pub fn activations(&self) -> &[DataMatrix] {
        &self.post
    }
}

/// Runs `x` through every layer, returning the reconstruction and the cache
/// backpropagation needs.
pub fn forward(model: &AutoencoderModel, x: &DataMatrix) -> Result<(DataMatrix, ForwardCache)> {
    model.check_input(x)?;
    let mut pre = Vec::with_capacity(model.layers.len());
    let mut post: Vec<DataMatrix> = Vec::with_capacity(model.layers.len());
    for layer in &model.layers {
        let input = post.last().unwrap_or(x);
        let (z, a) = layer.forward(input);
        pre.push(z);
        post.push(a);
    }
    let cache = ForwardCache {
        pre,
        post,
        model_fingerprint: model.fingerprint(),
        input_fingerprint: matrix_fingerprint(x),
    };
    Ok((cache.output().clone(), cache))
}

/// Reconstruction only.
pub fn reconstruct(model: &AutoencoderModel, x: &DataMatrix) -> Result<DataMatrix> {
    model.check_input(x)?;
    let mut current = x.clone();
    for layer in &model.layers {
        current = layer.forward(&current).1;
    }
    Ok(current)
}

fn check_same_shape(x: &DataMatrix, x_hat: &DataMatrix) -> Result<()> {
    if x.shape() != x_hat.shape() {
        return Err(Error::Shape(format!(
            "input {:?} and reconstruction {:?} differ in shape",
            x.shape(),
            x_hat.shape()
        )));
    }
    Ok(())
}

/// Mean over every entry of `|x - x'|` (MAE) or `(x - x')²` (MSE).
pub fn loss(x: &DataMatrix, x_hat: &DataMatrix, kind: LossKind) -> Result<f64> {
    check_same_shape(x, x_hat)?;
    if x.values().is_empty() {
        return Ok(0.0);
    }
    let total: f64 = x
        .values()
        .iter()
        .zip(x_hat.values())
        .map(|(a, b)| kind.elementwise(b - a))
        .sum();
    Ok(total / x.values().len() as f64)
}

/// One loss value per row: the mean over that row's entries.
pub fn row_losses(x: &DataMatrix, x_hat: &DataMatrix, kind: LossKind) -> Result<Vec<f64>> {
    check_same_shape(x, x_hat)?;
    let d = x.cols().max(1) as f64;
    Ok((0..x.rows())
        .map(|r| {
            x.row(r)
                .iter()
                .zip(x_hat.row(r))
                .map(|(a, b)| kind.elementwise(b - a))
                .sum::<f64>()
                / d
        })
        .collect())
}

/// Gradient of one layer's weights and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: DataMatrix,
    pub bias: Vec<f64>,
}

/// Gradients for every layer, in model layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
}

impl Gradients {
    /// Flattened in the same order as [`AutoencoderModel::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(l.weights.values());
            out.extend_from_slice(&l.bias);
        }
        out
    }
}

/// Exact gradient of `loss(x, forward(x), kind)` with respect to every
/// parameter. The cache must come from `forward(model, x)`.
pub fn backward(
    model: &AutoencoderModel,
    cache: &ForwardCache,
    x: &DataMatrix,
    kind: LossKind,
) -> Result<Gradients> {
    if cache.model_fingerprint != model.fingerprint() {
        return Err(Error::Cache("model parameters changed since the forward pass".into()));
    }
    if cache.input_fingerprint != matrix_fingerprint(x) || cache.pre.len() != model.layers.len() {
        return Err(Error::Cache("input differs from the forward pass".into()));
    }
    let n_entries = (x.rows() * x.cols()) as f64;
    let output = cache.output();

    // dL/d(output)
    let mut upstream = DataMatrix::zeros(x.rows(), x.cols());
    if n_entries > 0.0 {
        for r in 0..x.rows() {
            for c in 0..x.cols() {
                let g = kind.elementwise_grad(output.get(r, c) - x.get(r, c)) / n_entries;
                upstream.set(r, c, g);
            }
        }
    }

    let mut grads = Vec::with_capacity(model.layers.len());
    for (li, layer) in model.layers.iter().enumerate().rev() {
        let z = &cache.pre[li];
        let a = &cache.post[li];
        let input = if li == 0 { x } else { &cache.post[li - 1] };
        let (out_dim, in_dim) = layer.weights.shape();

        let mut delta = upstream;
        for r in 0..delta.rows() {
            for o in 0..out_dim {
                let d = delta.get(r, o) * layer.activation.derivative(z.get(r, o), a.get(r, o));
                delta.set(r, o, d);
            }
        }

        let mut dw = DataMatrix::zeros(out_dim, in_dim);
        let mut db = vec![0.0; out_dim];
        for r in 0..delta.rows() {
            let inp = input.row(r);
            for o in 0..out_dim {
                let d = delta.get(r, o);
                db[o] += d;
                let row = dw.row_mut(o);
                for (w, &ak) in row.iter_mut().zip(inp) {
                    *w += d * ak;
                }
            }
        }

        let mut next = DataMatrix::zeros(delta.rows(), in_dim);
        if li > 0 {
            for r in 0..delta.rows() {
                for o in 0..out_dim {
                    let d = delta.get(r, o);
                    let w = layer.weights.row(o);
                    for (acc, &wk) in next.row_mut(r).iter_mut().zip(w) {
                        *acc += d * wk;
                    }
                }
            }
        }
        upstream = next;
        grads.push(LayerGradient {
            weights: dw,
            bias: db,
        });
    }
    grads.reverse();
    Ok(Gradients { layers: grads })
}

/// Per-row reconstruction loss. Each row's score depends on that row alone.
pub fn score(model: &AutoencoderModel, x: &DataMatrix, kind: LossKind) -> Result<AnomalyScores> {
    let x_hat = reconstruct(model, x)?;
    AnomalyScores::new(row_losses(x, &x_hat, kind)?)
}
