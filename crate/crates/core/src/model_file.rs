//! Versioned plain-text model files.
//!
//! A file is a list of `key=value` lines. It starts with
//! `format=recon-detect-model` and `version=1`, then records the
//! architecture, then the parameters. Numbers use the shortest decimal text
//! that parses back to the same `f64`, so a load reproduces scores bit for
//! bit.
//!
//! Autoencoder parameters follow layer order, each layer's weights row-major
//! (`layer.<i>.weights`) then its bias (`layer.<i>.bias`). PCA components
//! are stored column by column (`component.<j>`).

use std::collections::HashMap;
use std::path::Path;

use crate::autoencoder::{Activation, AutoencoderModel, DenseLayer, LossKind};
use crate::data::{fmt_f64, write_atomic};
use crate::error::{Error, Result};
use crate::linalg::DataMatrix;
use crate::pca::PcaModel;
use crate::pipeline::{AutoencoderDetector, Detector};
use crate::preprocess::MinMaxScaler;

pub const FORMAT_NAME: &str = "recon-detect-model";
pub const FORMAT_VERSION: u32 = 1;

fn join(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(",")
}

struct Writer(String);

impl Writer {
    fn new(kind: &str) -> Self {
        let mut w = Writer(String::new());
        w.kv("format", FORMAT_NAME);
        w.kv("version", FORMAT_VERSION);
        w.kv("kind", kind);
        w
    }

    fn kv(&mut self, key: &str, value: impl std::fmt::Display) {
        self.0.push_str(key);
        self.0.push('=');
        self.0.push_str(&value.to_string());
        self.0.push('\n');
    }
}

pub fn autoencoder_to_string(det: &AutoencoderDetector) -> String {
    let m = &det.model;
    let mut w = Writer::new("autoencoder");
    w.kv("loss", det.loss);
    w.kv("input_dim", m.input_dim());
    w.kv("bottleneck_dim", m.bottleneck_dim());
    w.kv("encoder_layers", m.encoder().len());
    w.kv(
        "widths",
        m.widths()
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(","),
    );
    w.kv(
        "activations",
        m.layers()
            .iter()
            .map(|l| l.activation.tag())
            .collect::<Vec<_>>()
            .join(","),
    );
    match &det.scaler {
        Some(s) => {
            w.kv("scaler", "minmax");
            w.kv("scaler.min", join(&s.min));
            w.kv("scaler.max", join(&s.max));
        }
        None => w.kv("scaler", "none"),
    }
    for (i, l) in m.layers().iter().enumerate() {
        w.kv(&format!("layer.{i}.weights"), join(l.weights.values()));
        w.kv(&format!("layer.{i}.bias"), join(&l.bias));
    }
    w.0
}

pub fn pca_to_string(m: &PcaModel) -> String {
    let mut w = Writer::new("pca");
    w.kv("n_features", m.n_features());
    w.kv("k", m.k());
    w.kv("standardized", m.standardized);
    w.kv("total_variance", fmt_f64(m.total_variance));
    w.kv("mean", join(&m.mean));
    w.kv("scale", join(&m.scale));
    w.kv("eigenvalues", join(&m.eigenvalues));
    for j in 0..m.k() {
        w.kv(&format!("component.{j}"), join(&m.components.column(j)));
    }
    w.0
}

pub fn detector_to_string(d: &Detector) -> String {
    match d {
        Detector::Autoencoder(a) => autoencoder_to_string(a),
        Detector::Pca(p) => pca_to_string(p),
    }
}

struct Fields(HashMap<String, String>);

impl Fields {
    fn get(&self, key: &str) -> Result<&str> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Model(format!("missing key {key:?}")))
    }

    fn usize(&self, key: &str) -> Result<usize> {
        self.get(key)?
            .parse()
            .map_err(|_| Error::Model(format!("{key} is not a count")))
    }

    fn floats(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.get(key)?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Model(format!("{key}: bad number {s:?}")))
            })
            .collect()
    }

    fn floats_len(&self, key: &str, len: usize) -> Result<Vec<f64>> {
        let v = self.floats(key)?;
        if v.len() != len {
            return Err(Error::Model(format!(
                "{key} has {} values, expected {len}",
                v.len()
            )));
        }
        Ok(v)
    }
}

fn parse_fields(text: &str) -> Result<Fields> {
    let mut map = HashMap::new();
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some(l) if l == format!("format={FORMAT_NAME}") => {}
        other => {
            return Err(Error::Model(format!(
                "expected format={FORMAT_NAME} on the first line, got {other:?}"
            )))
        }
    }
    for line in lines {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Model(format!("line without '=': {line:?}")))?;
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Model(format!("duplicate key {k:?}")));
        }
    }
    let fields = Fields(map);
    let version = fields.get("version")?;
    if version != FORMAT_VERSION.to_string() {
        return Err(Error::Version {
            found: version.to_string(),
            expected: FORMAT_VERSION,
        });
    }
    Ok(fields)
}

fn parse_autoencoder(f: &Fields) -> Result<AutoencoderDetector> {
    let loss: LossKind = f.get("loss")?.parse()?;
    let widths: Vec<usize> = f
        .get("widths")?
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Model(format!("bad width {s:?}")))
        })
        .collect::<Result<_>>()?;
    let activations: Vec<Activation> = f
        .get("activations")?
        .split(',')
        .map(str::parse)
        .collect::<Result<_>>()?;
    if widths.len() < 2 || activations.len() != widths.len() - 1 {
        return Err(Error::Model(format!(
            "{} widths do not match {} activations",
            widths.len(),
            activations.len()
        )));
    }
    let n_encoder = f.usize("encoder_layers")?;
    let mut layers = Vec::with_capacity(activations.len());
    for (i, act) in activations.iter().enumerate() {
        let (in_dim, out_dim) = (widths[i], widths[i + 1]);
        let w = f.floats_len(&format!("layer.{i}.weights"), in_dim * out_dim)?;
        let b = f.floats_len(&format!("layer.{i}.bias"), out_dim)?;
        layers.push(DenseLayer::new(DataMatrix::new(out_dim, in_dim, w)?, b, *act)?);
    }
    if n_encoder >= layers.len() {
        return Err(Error::Model("encoder_layers leaves no decoder".into()));
    }
    let decoder = layers.split_off(n_encoder);
    let model = AutoencoderModel::from_layers(layers, decoder)?;
    if f.usize("input_dim")? != model.input_dim() || f.usize("bottleneck_dim")? != model.bottleneck_dim() {
        return Err(Error::Model("declared dims disagree with the widths".into()));
    }
    let scaler = match f.get("scaler")? {
        "none" => None,
        "minmax" => {
            let d = model.input_dim();
            Some(MinMaxScaler {
                min: f.floats_len("scaler.min", d)?,
                max: f.floats_len("scaler.max", d)?,
            })
        }
        other => return Err(Error::Model(format!("unknown scaler {other:?}"))),
    };
    Ok(AutoencoderDetector {
        scaler,
        model,
        loss,
    })
}

fn parse_pca(f: &Fields) -> Result<PcaModel> {
    let d = f.usize("n_features")?;
    let k = f.usize("k")?;
    if k == 0 || k > d {
        return Err(Error::Model(format!("k={k} out of range for {d} features")));
    }
    let standardized = match f.get("standardized")? {
        "true" => true,
        "false" => false,
        other => return Err(Error::Model(format!("standardized={other:?}"))),
    };
    let mut components = DataMatrix::zeros(d, k);
    for j in 0..k {
        for (i, v) in f.floats_len(&format!("component.{j}"), d)?.into_iter().enumerate() {
            components.set(i, j, v);
        }
    }
    let total = f.floats_len("total_variance", 1)?[0];
    Ok(PcaModel {
        mean: f.floats_len("mean", d)?,
        scale: f.floats_len("scale", d)?,
        components,
        eigenvalues: f.floats_len("eigenvalues", k)?,
        total_variance: total,
        standardized,
    })
}

pub fn parse_detector(text: &str) -> Result<Detector> {
    let f = parse_fields(text)?;
    match f.get("kind")? {
        "autoencoder" => parse_autoencoder(&f).map(Detector::Autoencoder),
        "pca" => parse_pca(&f).map(Detector::Pca),
        other => Err(Error::Model(format!("unknown model kind {other:?}"))),
    }
}

pub fn save_detector(d: &Detector, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), detector_to_string(d).as_bytes())
}

pub fn load_detector(path: impl AsRef<Path>) -> Result<Detector> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_detector(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoencoder::build_autoencoder;
    use crate::pca::{fit_pca, ComponentSelection};

    fn ae() -> AutoencoderDetector {
        AutoencoderDetector {
            scaler: Some(MinMaxScaler {
                min: vec![0.0, -1.0, 0.1, 2.0, 0.0],
                max: vec![1.0, 1.0, 0.3, 9.5, 1e-7],
            }),
            model: build_autoencoder(5, &[3], 2, Activation::Relu, Activation::Sigmoid, 4).unwrap(),
            loss: LossKind::Mae,
        }
    }

    #[test]
    fn autoencoder_text_round_trip() {
        let d = Detector::Autoencoder(ae());
        let text = detector_to_string(&d);
        assert!(text.starts_with("format=recon-detect-model\nversion=1\nkind=autoencoder\n"));
        assert!(text.contains("widths=5,3,2,3,5\n"));
        assert!(text.contains("activations=relu,relu,relu,sigmoid\n"));
        assert_eq!(parse_detector(&text).unwrap(), d);
    }

    #[test]
    fn pca_text_round_trip() {
        let x = DataMatrix::from_rows(&[[1.0, 2.0, 0.5], [2.0, 1.0, 0.25], [0.0, 4.0, 1.0], [3.0, 3.0, 0.0]]).unwrap();
        let d = Detector::Pca(fit_pca(&x, ComponentSelection::Fixed(2), true).unwrap());
        assert_eq!(parse_detector(&detector_to_string(&d)).unwrap(), d);
    }

    #[test]
    fn unknown_version_is_rejected() {
        let text = detector_to_string(&Detector::Autoencoder(ae())).replace("version=1", "version=2");
        assert!(matches!(
            parse_detector(&text),
            Err(Error::Version { expected: 1, .. })
        ));
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(matches!(parse_detector("hello"), Err(Error::Model(_))));
        let text = detector_to_string(&Detector::Autoencoder(ae()));
        let truncated: String = text
            .lines()
            .filter(|l| !l.starts_with("layer.3.bias"))
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(matches!(parse_detector(&truncated), Err(Error::Model(_))));
        let bad_kind = text.replace("kind=autoencoder", "kind=forest");
        assert!(matches!(parse_detector(&bad_kind), Err(Error::Model(_))));
    }
}
