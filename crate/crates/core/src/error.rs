use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit can report.
///
/// [`Error::category`] gives the short machine-readable tag the CLI prints
/// as `error:<category>:`.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    Convergence { sweeps: usize, off_norm: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid architecture: {0}")]
    Architecture(String),

    #[error("label {value} at row {row} is not 0 or 1")]
    LabelDomain { row: usize, value: String },

    #[error("cache does not belong to this model and input: {0}")]
    Cache(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("format error at row {row}{}: {message}", col.map(|c| format!(", column {c}")).unwrap_or_default())]
    Format {
        row: usize,
        col: Option<usize>,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("reports are not comparable: {0}")]
    Comparability(String),

    #[error("unsupported model file version {found} (expected {expected})")]
    Version { found: String, expected: u32 },

    #[error("malformed model file: {0}")]
    Model(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn category(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::Degenerate(_) => "degenerate",
            Error::NonFinite { .. } => "non-finite",
            Error::Convergence { .. } => "convergence",
            Error::Parameter(_) => "parameter",
            Error::Architecture(_) => "architecture",
            Error::LabelDomain { .. } => "label-domain",
            Error::Cache(_) => "cache",
            Error::Divergence { .. } => "divergence",
            Error::Format { .. } => "format",
            Error::Schema(_) => "schema",
            Error::Comparability(_) => "comparability",
            Error::Version { .. } => "version",
            Error::Model(_) => "model",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
