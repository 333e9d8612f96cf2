//! Command-line front end.
//!
//! Every subcommand resolves its settings from layers, later ones winning:
//! built-in defaults, the `--paper-faithful` preset, the `RECON_OUT_DIR`
//! environment variable (output location only), a `key=value` file given
//! with `--config`, then flags. Keys are the long flag names without the
//! leading dashes. The merged settings are written next to the outputs
//! (`<command>.config`, or `<file>.spec` for `gen`) and can be replayed
//! with `--config`.
//!
//! Failures print one line `error:<category>: <message>` on stderr and exit
//! non-zero.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::autoencoder::{Activation, LossKind, TrainConfig};
use crate::data::{
    fmt_f64, generate_synthetic, load_csv, load_unlabeled_csv, read_header, save_csv,
    write_atomic, GeneratorSpec, LabeledDataset, TimeColumn,
};
use crate::detector::{
    compare, derive_threshold, evaluate, histogram, histogram_csv, ThresholdMethod,
};
use crate::error::{Error, Result};
use crate::model_file::{load_detector, save_detector};
use crate::pca::{explained_variance, ComponentSelection};
use crate::pipeline::{
    evaluate_partitions, fit_pca_detector, partition, train_autoencoder_detector,
    AutoencoderSettings, ClassScores, Detector, PartitionEvaluation, Partitions, ThresholdRule,
};
use crate::preprocess::SplitSpec;

/// Environment variable that replaces the default output location.
pub const OUT_DIR_ENV: &str = "RECON_OUT_DIR";

const CLASS_COLUMN: &str = "Class";
const HISTOGRAM_BINS: &str = "50";

#[derive(Debug, Parser)]
#[command(
    name = "recon",
    version,
    about = "Reconstruction-error fraud detection with an autoencoder or PCA"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic transaction CSV.
    Gen(GenArgs),
    /// Train an autoencoder on the legitimate rows of the training split.
    TrainAe(TrainAeArgs),
    /// Fit PCA on the legitimate rows of the training split.
    FitPca(FitPcaArgs),
    /// Score every row of a CSV with a saved model.
    Score(ScoreArgs),
    /// Threshold a model's scores and report per-class counts.
    Evaluate(EvaluateArgs),
    /// Evaluate two models on identical partitions.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// key=value settings file; flags on the command line take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Pin the settings the original pipeline states
    #[arg(long)]
    pub paper_faithful: bool,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub data: Option<String>,
    /// Whether the first line is a header (bare flag means true)
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub has_header: Option<String>,
    #[arg(long)]
    pub test_frac: Option<String>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub normal: Option<String>,
    #[arg(long)]
    pub fraud: Option<String>,
    #[arg(long)]
    pub dim: Option<String>,
    #[arg(long)]
    pub latent: Option<String>,
    #[arg(long)]
    pub shift: Option<String>,
    #[arg(long)]
    pub noise: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainAeArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    /// Encoder hidden widths, comma separated (mirrored in the decoder)
    #[arg(long)]
    pub hidden: Option<String>,
    #[arg(long)]
    pub bottleneck: Option<String>,
    #[arg(long)]
    pub hidden_activation: Option<String>,
    #[arg(long)]
    pub output_activation: Option<String>,
    /// minmax or none
    #[arg(long)]
    pub scaling: Option<String>,
    /// mae or mse
    #[arg(long)]
    pub loss: Option<String>,
    #[arg(long)]
    pub epochs: Option<String>,
    #[arg(long)]
    pub batch_size: Option<String>,
    #[arg(long)]
    pub learning_rate: Option<String>,
    #[arg(long)]
    pub patience: Option<String>,
    #[arg(long)]
    pub min_delta: Option<String>,
    #[arg(long)]
    pub validation_fraction: Option<String>,
}

#[derive(Debug, Args)]
pub struct FitPcaArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    /// Number of components; overrides --variance when set
    #[arg(long)]
    pub k: Option<String>,
    /// Cumulative explained-variance target in (0, 1]
    #[arg(long)]
    pub variance: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub standardize: Option<String>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub data: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub has_header: Option<String>,
    /// true, false or auto (a header with a Class column means labeled)
    #[arg(long)]
    pub labeled: Option<String>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Fixed threshold; overrides --threshold-method when set
    #[arg(long)]
    pub threshold: Option<String>,
    /// e.g. mean_plus_k_std(1), percentile(99.9), matched_mislabel(0.001)
    #[arg(long)]
    pub threshold_method: Option<String>,
    #[arg(long)]
    pub bins: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub model: Option<String>,
    #[command(flatten)]
    pub threshold: ThresholdArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    /// Reference model; the matched comparison uses its mislabel rate
    #[arg(long)]
    pub model_a: Option<String>,
    #[arg(long)]
    pub model_b: Option<String>,
    #[command(flatten)]
    pub threshold: ThresholdArgs,
}

/// Ordered `key=value` settings of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    command: &'static str,
    entries: Vec<(String, String)>,
}

impl Settings {
    fn new(command: &'static str, defaults: &[(&str, &str)]) -> Self {
        Self {
            command,
            entries: defaults
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => {
                entry.1 = value.trim().to_string();
                Ok(())
            }
            None => Err(Error::Config(format!(
                "unknown key {key:?} for {}",
                self.command
            ))),
        }
    }

    pub fn raw(&self, key: &str) -> &str {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .unwrap_or_else(|| panic!("{key} is not a {} setting", self.command))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.raw(key);
        raw.parse()
            .map_err(|_| Error::Config(format!("{key}={raw:?} is not valid")))
    }

    fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.get(key).map(Some)
        }
    }

    fn path(&self, key: &str) -> Result<PathBuf> {
        match self.raw(key) {
            "" => Err(Error::Config(format!("--{key} is required"))),
            p => Ok(PathBuf::from(p)),
        }
    }

    fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{}:{}: expected key=value", path.display(), n + 1))
            })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// The settings as a replayable config file.
    pub fn render(&self) -> String {
        let mut out = format!("# recon {}\n", self.command);
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

fn resolve(
    command: &'static str,
    defaults: &[(&str, &str)],
    preset: &[(&str, &str)],
    common: &Common,
    flags: Vec<(&str, &Option<String>)>,
    out_dir_env: Option<&str>,
) -> Result<Settings> {
    let mut s = Settings::new(command, defaults);
    if common.paper_faithful {
        for (k, v) in preset {
            s.set(k, v)?;
        }
    }
    if let Some(dir) = out_dir_env.filter(|d| !d.is_empty()) {
        let out = if command == "gen" {
            let name = Path::new(s.raw("out"))
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "data.csv".into());
            Path::new(dir).join(name)
        } else {
            PathBuf::from(dir)
        };
        s.set("out", &out.to_string_lossy())?;
    }
    if let Some(path) = &common.config {
        s.apply_file(path)?;
    }
    let common_flags = [("out", &common.out), ("seed", &common.seed)];
    for (k, v) in common_flags.into_iter().chain(flags) {
        if let Some(v) = v {
            s.set(k, v)?;
        }
    }
    Ok(s)
}

fn data_flags(d: &DataArgs) -> Vec<(&'static str, &Option<String>)> {
    vec![
        ("data", &d.data),
        ("has-header", &d.has_header),
        ("test-frac", &d.test_frac),
    ]
}

const DATA_DEFAULTS: [(&str, &str); 4] = [
    ("data", ""),
    ("has-header", "true"),
    ("seed", "111"),
    ("test-frac", "0.2"),
];

const SPLIT_PRESET: [(&str, &str); 2] = [("seed", "111"), ("test-frac", "0.2")];

fn with_data_defaults(extra: &[(&'static str, &'static str)]) -> Vec<(&'static str, &'static str)> {
    let mut v = vec![("out", "out")];
    v.extend(DATA_DEFAULTS);
    v.extend_from_slice(extra);
    v
}

fn echo(settings: &Settings, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_atomic(
        &dir.join(format!("{}.config", settings.command)),
        settings.render().as_bytes(),
    )
}

fn load_labeled(s: &Settings) -> Result<LabeledDataset> {
    load_csv(
        s.path("data")?,
        s.get("has-header")?,
        CLASS_COLUMN,
        &TimeColumn::default_name(),
    )
}

fn split_spec(s: &Settings) -> Result<SplitSpec> {
    SplitSpec::new(s.get("test-frac")?, s.get("seed")?)
}

fn check_schema(detector: &Detector, n_features: usize, what: &str) -> Result<()> {
    if detector.input_dim() != n_features {
        return Err(Error::Schema(format!(
            "{what} expects {} features, data has {n_features}",
            detector.input_dim()
        )));
    }
    Ok(())
}

fn threshold_rule(s: &Settings) -> Result<ThresholdRule> {
    match s.optional::<f64>("threshold")? {
        Some(v) => Ok(ThresholdRule::Manual(v)),
        None => Ok(ThresholdRule::Derived(
            s.raw("threshold-method").parse::<ThresholdMethod>()?,
        )),
    }
}

fn threshold_flags(t: &ThresholdArgs) -> Vec<(&'static str, &Option<String>)> {
    vec![
        ("threshold", &t.threshold),
        ("threshold-method", &t.threshold_method),
        ("bins", &t.bins),
    ]
}

const THRESHOLD_DEFAULTS: [(&str, &str); 3] = [
    ("threshold", ""),
    ("threshold-method", "mean_plus_k_std(1)"),
    ("bins", HISTOGRAM_BINS),
];

/// Parses `args` (program name first) and runs the command, writing the
/// human-readable report to `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Config(e.to_string()))?;
    let env = std::env::var(OUT_DIR_ENV).ok();
    execute(cli.command, env.as_deref(), stdout)
}

/// Runs a parsed command. `out_dir_env` stands in for `RECON_OUT_DIR`.
pub fn execute(command: Command, out_dir_env: Option<&str>, stdout: &mut dyn Write) -> Result<()> {
    let mut report = String::new();
    match command {
        Command::Gen(a) => cmd_gen(&a, out_dir_env, &mut report)?,
        Command::TrainAe(a) => cmd_train_ae(&a, out_dir_env, &mut report)?,
        Command::FitPca(a) => cmd_fit_pca(&a, out_dir_env, &mut report)?,
        Command::Score(a) => cmd_score(&a, out_dir_env, &mut report)?,
        Command::Evaluate(a) => cmd_evaluate(&a, out_dir_env, &mut report)?,
        Command::Compare(a) => cmd_compare(&a, out_dir_env, &mut report)?,
    }
    stdout
        .write_all(report.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

/// Entry point of the `recon` binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error:usage: {first}");
            return ExitCode::from(2);
        }
    };
    let env = std::env::var(OUT_DIR_ENV).ok();
    match execute(cli.command, env.as_deref(), &mut std::io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error:{}: {e}", e.category());
            ExitCode::FAILURE
        }
    }
}

pub fn cmd_gen(a: &GenArgs, env: Option<&str>, report: &mut String) -> Result<()> {
    let d = GeneratorSpec::default();
    let defaults = [
        ("out", "data.csv".to_string()),
        ("seed", d.seed.to_string()),
        ("normal", d.n_normal.to_string()),
        ("fraud", d.n_fraud.to_string()),
        ("dim", d.feature_dim.to_string()),
        ("latent", d.latent_dim.to_string()),
        ("shift", fmt_f64(d.fraud_shift)),
        ("noise", fmt_f64(d.noise_std)),
    ];
    let defaults: Vec<(&str, &str)> = defaults.iter().map(|(k, v)| (*k, v.as_str())).collect();
    let s = resolve(
        "gen",
        &defaults,
        &[],
        &a.common,
        vec![
            ("normal", &a.normal),
            ("fraud", &a.fraud),
            ("dim", &a.dim),
            ("latent", &a.latent),
            ("shift", &a.shift),
            ("noise", &a.noise),
        ],
        env,
    )?;
    let spec = GeneratorSpec {
        n_normal: s.get("normal")?,
        n_fraud: s.get("fraud")?,
        feature_dim: s.get("dim")?,
        latent_dim: s.get("latent")?,
        fraud_shift: s.get("shift")?,
        noise_std: s.get("noise")?,
        seed: s.get("seed")?,
    };
    spec.validate()?;
    let out = s.path("out")?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut sidecar = out.clone().into_os_string();
    sidecar.push(".spec");
    write_atomic(Path::new(&sidecar), s.render().as_bytes())?;
    let ds = generate_synthetic(&spec)?;
    save_csv(&ds, &out)?;
    let _ = writeln!(
        report,
        "wrote {} rows ({} normal, {} fraud, {} features) to {}",
        ds.len(),
        ds.count_label(0),
        ds.count_label(1),
        ds.n_features(),
        out.display()
    );
    Ok(())
}

fn parse_widths(raw: &str) -> Result<Vec<usize>> {
    raw.split(',')
        .map(str::trim)
        .filter(|w| !w.is_empty())
        .map(|w| {
            w.parse()
                .map_err(|_| Error::Config(format!("hidden width {w:?} is not a count")))
        })
        .collect()
}

fn split_line(parts: &Partitions) -> String {
    format!(
        "split: {} train rows ({} normal, {} fraud), {} test rows ({} normal, {} fraud)",
        parts.train.len(),
        parts.train.count_label(0),
        parts.train.count_label(1),
        parts.test.len(),
        parts.test.count_label(0),
        parts.test.count_label(1)
    )
}

pub fn cmd_train_ae(a: &TrainAeArgs, env: Option<&str>, report: &mut String) -> Result<()> {
    let t = TrainConfig::default();
    let owned = [
        ("hidden", "16".to_string()),
        ("bottleneck", "8".to_string()),
        ("hidden-activation", "relu".to_string()),
        ("output-activation", "sigmoid".to_string()),
        ("scaling", "minmax".to_string()),
        ("loss", t.loss.to_string()),
        ("epochs", t.epochs.to_string()),
        ("batch-size", t.batch_size.to_string()),
        ("learning-rate", fmt_f64(t.learning_rate)),
        ("patience", t.patience.to_string()),
        ("min-delta", fmt_f64(t.min_delta)),
        ("validation-fraction", fmt_f64(t.validation_fraction)),
    ];
    let extra: Vec<(&str, &str)> = owned.iter().map(|(k, v)| (*k, v.as_str())).collect();
    let mut defaults = vec![("out", "out")];
    defaults.extend(DATA_DEFAULTS);
    defaults.extend(extra);
    let mut preset = SPLIT_PRESET.to_vec();
    preset.extend([("loss", "mae"), ("bottleneck", "8"), ("epochs", "2")]);
    let mut flags = data_flags(&a.data);
    flags.extend([
        ("hidden", &a.hidden),
        ("bottleneck", &a.bottleneck),
        ("hidden-activation", &a.hidden_activation),
        ("output-activation", &a.output_activation),
        ("scaling", &a.scaling),
        ("loss", &a.loss),
        ("epochs", &a.epochs),
        ("batch-size", &a.batch_size),
        ("learning-rate", &a.learning_rate),
        ("patience", &a.patience),
        ("min-delta", &a.min_delta),
        ("validation-fraction", &a.validation_fraction),
    ]);
    let s = resolve("train-ae", &defaults, &preset, &a.common, flags, env)?;

    let minmax = match s.raw("scaling") {
        "minmax" => true,
        "none" => false,
        other => return Err(Error::Config(format!("scaling={other:?}: expected minmax or none"))),
    };
    let settings = AutoencoderSettings {
        hidden_widths: parse_widths(s.raw("hidden"))?,
        bottleneck: s.get("bottleneck")?,
        hidden_activation: s.raw("hidden-activation").parse::<Activation>()?,
        output_activation: s.raw("output-activation").parse::<Activation>()?,
        minmax,
        train: TrainConfig {
            learning_rate: s.get("learning-rate")?,
            epochs: s.get("epochs")?,
            batch_size: s.get("batch-size")?,
            patience: s.get("patience")?,
            min_delta: s.get("min-delta")?,
            seed: s.get("seed")?,
            loss: s.raw("loss").parse::<LossKind>()?,
            validation_fraction: s.get("validation-fraction")?,
        },
    };
    settings.train.validate()?;
    let split = split_spec(&s)?;
    let out = s.path("out")?;
    echo(&s, &out)?;

    let ds = load_labeled(&s)?;
    let parts = partition(&ds, &split)?;
    let (detector, history) = train_autoencoder_detector(&parts.train, &settings)?;
    let model_path = out.join("autoencoder.model");
    save_detector(&Detector::Autoencoder(detector), &model_path)?;
    write_atomic(&out.join("history.csv"), history.to_csv().as_bytes())?;

    let _ = writeln!(report, "{}", split_line(&parts));
    let _ = writeln!(
        report,
        "trained {} epochs (best epoch {}, best validation loss {}{})",
        history.epochs_run(),
        history.best_epoch,
        history.best_val_loss().map(fmt_f64).unwrap_or_else(|| "n/a".into()),
        if history.stopped_early { ", stopped early" } else { "" }
    );
    let _ = writeln!(report, "model written to {}", model_path.display());
    Ok(())
}

pub fn cmd_fit_pca(a: &FitPcaArgs, env: Option<&str>, report: &mut String) -> Result<()> {
    let defaults = with_data_defaults(&[("k", ""), ("variance", "0.95"), ("standardize", "true")]);
    let mut preset = SPLIT_PRESET.to_vec();
    preset.push(("standardize", "false"));
    let mut flags = data_flags(&a.data);
    flags.extend([
        ("k", &a.k),
        ("variance", &a.variance),
        ("standardize", &a.standardize),
    ]);
    let s = resolve("fit-pca", &defaults, &preset, &a.common, flags, env)?;
    let selection = match s.optional::<usize>("k")? {
        Some(k) => ComponentSelection::Fixed(k),
        None => ComponentSelection::VarianceTarget(s.get("variance")?),
    };
    let standardized: bool = s.get("standardize")?;
    let split = split_spec(&s)?;
    let out = s.path("out")?;
    echo(&s, &out)?;

    let ds = load_labeled(&s)?;
    let parts = partition(&ds, &split)?;
    let model = fit_pca_detector(&parts.train, selection, standardized)?;
    let ratios = explained_variance(&model);
    let mut table = String::from("component,eigenvalue,explained_variance,cumulative\n");
    let mut cumulative = 0.0;
    for (j, (l, r)) in model.eigenvalues.iter().zip(&ratios).enumerate() {
        cumulative += r;
        let _ = writeln!(
            table,
            "{},{},{},{}",
            j + 1,
            fmt_f64(*l),
            fmt_f64(*r),
            fmt_f64(cumulative)
        );
    }
    write_atomic(&out.join("explained_variance.csv"), table.as_bytes())?;
    let k = model.k();
    let model_path = out.join("pca.model");
    save_detector(&Detector::Pca(model), &model_path)?;

    let _ = writeln!(report, "{}", split_line(&parts));
    let _ = writeln!(
        report,
        "kept k={k} of {} components, explaining {:.6} of the variance ({})",
        ds.n_features(),
        cumulative,
        if standardized { "standardized" } else { "unscaled" }
    );
    let _ = writeln!(report, "model written to {}", model_path.display());
    Ok(())
}

pub fn cmd_score(a: &ScoreArgs, env: Option<&str>, report: &mut String) -> Result<()> {
    let defaults = [
        ("out", "out"),
        ("seed", ""),
        ("model", ""),
        ("data", ""),
        ("has-header", "true"),
        ("labeled", "auto"),
    ];
    let s = resolve(
        "score",
        &defaults,
        &[],
        &a.common,
        vec![
            ("model", &a.model),
            ("data", &a.data),
            ("has-header", &a.has_header),
            ("labeled", &a.labeled),
        ],
        env,
    )?;
    let has_header: bool = s.get("has-header")?;
    let data = s.path("data")?;
    let labeled = match s.raw("labeled") {
        "auto" if has_header => read_header(&data)?.iter().any(|c| c == CLASS_COLUMN),
        "auto" => true,
        other => other
            .parse()
            .map_err(|_| Error::Config(format!("labeled={other:?}: expected true, false or auto")))?,
    };
    let detector = load_detector(s.path("model")?)?;
    let out = s.path("out")?;
    echo(&s, &out)?;

    let (features, labels) = if labeled {
        let ds = load_csv(&data, has_header, CLASS_COLUMN, &TimeColumn::default_name())?;
        (ds.features, Some(ds.labels))
    } else {
        (load_unlabeled_csv(&data, has_header, &TimeColumn::default_name())?.features, None)
    };
    check_schema(&detector, features.cols(), "model")?;
    let scores = detector.score(&features)?;
    let mut csv = String::from(if labels.is_some() {
        "row_index,score,class\n"
    } else {
        "row_index,score\n"
    });
    for (i, sc) in scores.iter().enumerate() {
        match &labels {
            Some(l) => writeln!(csv, "{i},{},{}", fmt_f64(sc), l[i]),
            None => writeln!(csv, "{i},{}", fmt_f64(sc)),
        }
        .expect("writing to a String cannot fail");
    }
    let path = out.join("scores.csv");
    write_atomic(&path, csv.as_bytes())?;
    let _ = writeln!(
        report,
        "scored {} rows with the {} model; scores written to {}",
        scores.len(),
        detector.kind(),
        path.display()
    );
    Ok(())
}

fn write_histograms(ev: &PartitionEvaluation, bins: usize, out: &Path, prefix: &str) -> Result<()> {
    let mut sets: Vec<(&str, &ClassScores)> = vec![("train", &ev.train_scores)];
    if let Some(t) = &ev.test_scores {
        sets.push(("test", t));
    }
    for (name, sc) in sets {
        let h = histogram(&sc.normal, &sc.anomaly, bins);
        write_atomic(
            &out.join(format!("{prefix}histogram_{name}.csv")),
            histogram_csv(&h).as_bytes(),
        )?;
    }
    Ok(())
}

fn render_evaluation(ev: &PartitionEvaluation, title: &str) -> (String, String) {
    let mut table = ev.train.render_table(&format!("{title}: train partition"));
    let mut kv = ev.train.render_key_values("train");
    if let Some(test) = &ev.test {
        table.push_str(&test.render_table(&format!("{title}: test partition")));
        kv.push_str(&test.render_key_values("test"));
    }
    (table, kv)
}

pub fn cmd_evaluate(a: &EvaluateArgs, env: Option<&str>, report: &mut String) -> Result<()> {
    let mut defaults = with_data_defaults(&[("model", "")]);
    defaults.extend(THRESHOLD_DEFAULTS);
    let mut flags = data_flags(&a.data);
    flags.push(("model", &a.model));
    flags.extend(threshold_flags(&a.threshold));
    let s = resolve("evaluate", &defaults, &SPLIT_PRESET, &a.common, flags, env)?;
    let rule = threshold_rule(&s)?;
    let bins: usize = s.get("bins")?;
    let split = split_spec(&s)?;
    let detector = load_detector(s.path("model")?)?;
    let out = s.path("out")?;
    echo(&s, &out)?;

    let ds = load_labeled(&s)?;
    check_schema(&detector, ds.n_features(), "model")?;
    let parts = partition(&ds, &split)?;
    let ev = evaluate_partitions(&detector, &parts, &rule)?;
    write_histograms(&ev, bins, &out, "")?;
    let (table, kv) = render_evaluation(&ev, detector.kind());
    let text = format!("{}\n{table}", split_line(&parts));
    write_atomic(&out.join("report.txt"), format!("{text}\n{kv}").as_bytes())?;
    report.push_str(&text);
    Ok(())
}

fn labels_for(a: &Detector, b: &Detector) -> (String, String) {
    if a.kind() == b.kind() {
        (format!("{}_a", a.kind()), format!("{}_b", b.kind()))
    } else {
        (a.kind().to_string(), b.kind().to_string())
    }
}

pub fn cmd_compare(a: &CompareArgs, env: Option<&str>, report: &mut String) -> Result<()> {
    let mut defaults = with_data_defaults(&[("model-a", ""), ("model-b", "")]);
    defaults.extend(THRESHOLD_DEFAULTS);
    let mut flags = data_flags(&a.data);
    flags.extend([("model-a", &a.model_a), ("model-b", &a.model_b)]);
    flags.extend(threshold_flags(&a.threshold));
    let s = resolve("compare", &defaults, &SPLIT_PRESET, &a.common, flags, env)?;
    let rule = threshold_rule(&s)?;
    let bins: usize = s.get("bins")?;
    let split = split_spec(&s)?;
    let det_a = load_detector(s.path("model-a")?)?;
    let det_b = load_detector(s.path("model-b")?)?;
    let out = s.path("out")?;
    echo(&s, &out)?;

    let ds = load_labeled(&s)?;
    check_schema(&det_a, ds.n_features(), "model-a")?;
    check_schema(&det_b, ds.n_features(), "model-b")?;
    let parts = partition(&ds, &split)?;
    let ev_a = evaluate_partitions(&det_a, &parts, &rule)?;
    let ev_b = evaluate_partitions(&det_b, &parts, &rule)?;
    let (la, lb) = labels_for(&det_a, &det_b);
    write_histograms(&ev_a, bins, &out, &format!("{la}_"))?;
    write_histograms(&ev_b, bins, &out, &format!("{lb}_"))?;

    let mut text = format!("{}\n", split_line(&parts));
    let mut kv = String::new();
    let mut blocks = vec![("train", &ev_a.train, &ev_b.train)];
    if let (Some(ta), Some(tb)) = (&ev_a.test, &ev_b.test) {
        blocks.push(("test", ta, tb));
    }
    for (name, ra, rb) in &blocks {
        let c = compare(&la, ra, &lb, rb)?;
        let _ = writeln!(text, "{name} partition, {} threshold per model", rule_name(&rule));
        text.push_str(&c.render_table());
        kv.push_str(&c.render_key_values(name));
    }

    // Matched comparison on the last partition evaluated (test when present).
    let (name, ra, _) = blocks.last().expect("train block is always present");
    let scores_b = if *name == "test" {
        ev_b.test_scores.as_ref().expect("test report implies test scores")
    } else {
        &ev_b.train_scores
    };
    let rate = ra.normal_mislabel_rate;
    let mut t_b = derive_threshold(
        &scores_b.normal,
        ThresholdMethod::MatchedMislabel { rate },
        &format!("{name}_normal"),
    )?;
    t_b.source = format!("{name}_normal of {lb}");
    let rb = evaluate(&scores_b.normal, &scores_b.anomaly, &t_b)?;
    let matched = compare(&la, ra, &lb, &rb)?;
    let _ = writeln!(
        text,
        "{name} partition, {lb} threshold matched to the {la} mislabel rate {:.6}",
        rate
    );
    text.push_str(&matched.render_table());
    let _ = writeln!(
        text,
        "  at matched mislabel rates ({la} {:.6}, {lb} {:.6}): fraud capture {la} {:.6}, {lb} {:.6}",
        ra.normal_mislabel_rate, rb.normal_mislabel_rate, ra.fraud_capture_rate, rb.fraud_capture_rate
    );
    kv.push_str(&matched.render_key_values(&format!("matched.{name}")));

    write_atomic(&out.join("compare.txt"), format!("{text}\n{kv}").as_bytes())?;
    report.push_str(&text);
    Ok(())
}

fn rule_name(rule: &ThresholdRule) -> String {
    match rule {
        ThresholdRule::Manual(v) => format!("manual {}", fmt_f64(*v)),
        ThresholdRule::Derived(m) => m.to_string(),
    }
}
