//! Labeled transaction datasets: CSV ingestion and export, concatenation and
//! a seeded latent-factor generator with planted off-manifold fraud.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{dot, DataMatrix};

pub const CLASS_COLUMN: &str = "Class";
pub const TIME_COLUMN: &str = "Time";

/// Feature rows with a 0/1 class label per row and an optional time column.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub features: DataMatrix,
    pub labels: Vec<u8>,
    pub time: Option<Vec<f64>>,
    pub feature_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(
        features: DataMatrix,
        labels: Vec<u8>,
        time: Option<Vec<f64>>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::Shape(format!(
                "{} labels for {} rows",
                labels.len(),
                features.rows()
            )));
        }
        if let Some(row) = labels.iter().position(|&l| l > 1) {
            return Err(Error::LabelDomain {
                row,
                value: labels[row].to_string(),
            });
        }
        if let Some(t) = &time {
            if t.len() != features.rows() {
                return Err(Error::Shape(format!(
                    "{} time values for {} rows",
                    t.len(),
                    features.rows()
                )));
            }
        }
        if feature_names.len() != features.cols() {
            return Err(Error::Shape(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.cols()
            )));
        }
        Ok(Self {
            features,
            labels,
            time,
            feature_names,
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn count_label(&self, label: u8) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Copies the listed rows, in order, into a new dataset.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            time: self
                .time
                .as_ref()
                .map(|t| indices.iter().map(|&i| t[i]).collect()),
            feature_names: self.feature_names.clone(),
        }
    }
}

/// Feature rows read from a file without a class column.
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledDataset {
    pub features: DataMatrix,
    pub time: Option<Vec<f64>>,
    pub feature_names: Vec<String>,
}

/// How to locate the time column while loading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TimeColumn {
    Absent,
    /// Use the named column when the header has it. Headerless files are
    /// read as having no time column.
    IfPresent(String),
    /// The named column must exist. In a headerless file this is the first
    /// column.
    Required(String),
}

impl TimeColumn {
    pub fn default_name() -> Self {
        TimeColumn::IfPresent(TIME_COLUMN.to_string())
    }
}

struct RawTable {
    header: Option<Vec<String>>,
    // (1-based file line, cells)
    records: Vec<(usize, Vec<String>)>,
    width: usize,
}

fn read_table(path: &Path, has_header: bool) -> Result<RawTable> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file);
    let mut header = None;
    let mut records = Vec::new();
    let mut width = None;
    for (i, rec) in reader.records().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| Error::Format {
            row: line,
            col: None,
            message: e.to_string(),
        })?;
        let cells: Vec<String> = rec.iter().map(|c| c.trim().to_string()).collect();
        match width {
            None => width = Some(cells.len()),
            Some(w) if w != cells.len() => {
                return Err(Error::Format {
                    row: line,
                    col: None,
                    message: format!("expected {w} fields, found {}", cells.len()),
                })
            }
            _ => {}
        }
        if has_header && header.is_none() {
            header = Some(cells);
        } else {
            records.push((line, cells));
        }
    }
    Ok(RawTable {
        header,
        records,
        width: width.unwrap_or(0),
    })
}

struct Layout {
    class: Option<usize>,
    time: Option<usize>,
    features: Vec<usize>,
    names: Vec<String>,
}

fn resolve_layout(table: &RawTable, class: Option<&str>, time: &TimeColumn) -> Result<Layout> {
    let (class_idx, time_idx) = match &table.header {
        Some(header) => {
            let find = |name: &str| header.iter().position(|h| h == name);
            let class_idx = match class {
                Some(name) => Some(find(name).ok_or_else(|| {
                    Error::Schema(format!("class column {name:?} not found in header"))
                })?),
                None => None,
            };
            let time_idx = match time {
                TimeColumn::Absent => None,
                TimeColumn::IfPresent(name) => find(name),
                TimeColumn::Required(name) => Some(find(name).ok_or_else(|| {
                    Error::Schema(format!("time column {name:?} not found in header"))
                })?),
            };
            (class_idx, time_idx)
        }
        None => {
            let class_idx = class.map(|_| table.width.saturating_sub(1));
            let time_idx = match time {
                TimeColumn::Required(_) => Some(0),
                _ => None,
            };
            if table.width == 0 && class.is_some() {
                return Err(Error::Schema("file has no columns".into()));
            }
            (class_idx, time_idx)
        }
    };
    if class_idx.is_some() && class_idx == time_idx {
        return Err(Error::Schema(
            "class and time resolve to the same column".into(),
        ));
    }
    let features: Vec<usize> = (0..table.width)
        .filter(|&c| Some(c) != class_idx && Some(c) != time_idx)
        .collect();
    let names = match &table.header {
        Some(header) => features.iter().map(|&c| header[c].clone()).collect(),
        None => (0..features.len()).map(|i| format!("F{i}")).collect(),
    };
    Ok(Layout {
        class: class_idx,
        time: time_idx,
        features,
        names,
    })
}

fn parse_cell(cell: &str, line: usize, col: usize) -> Result<f64> {
    let v: f64 = cell.parse().map_err(|_| Error::Format {
        row: line,
        col: Some(col + 1),
        message: format!("cannot parse {cell:?} as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Format {
            row: line,
            col: Some(col + 1),
            message: format!("{cell:?} is not finite"),
        });
    }
    Ok(v)
}

fn parse_label(cell: &str, line: usize, col: usize) -> Result<u8> {
    let v = parse_cell(cell, line, col)?;
    if v == 0.0 {
        Ok(0)
    } else if v == 1.0 {
        Ok(1)
    } else {
        Err(Error::LabelDomain {
            row: line,
            value: cell.to_string(),
        })
    }
}

struct Parsed {
    features: DataMatrix,
    labels: Option<Vec<u8>>,
    time: Option<Vec<f64>>,
    names: Vec<String>,
}

fn parse_table(table: &RawTable, layout: &Layout) -> Result<Parsed> {
    let n = table.records.len();
    let mut values = Vec::with_capacity(n * layout.features.len());
    let mut labels = layout.class.map(|_| Vec::with_capacity(n));
    let mut time = layout.time.map(|_| Vec::with_capacity(n));
    for (line, cells) in &table.records {
        for &c in &layout.features {
            values.push(parse_cell(&cells[c], *line, c)?);
        }
        if let (Some(c), Some(l)) = (layout.class, labels.as_mut()) {
            l.push(parse_label(&cells[c], *line, c)?);
        }
        if let (Some(c), Some(t)) = (layout.time, time.as_mut()) {
            t.push(parse_cell(&cells[c], *line, c)?);
        }
    }
    Ok(Parsed {
        features: DataMatrix::new(n, layout.features.len(), values)?,
        labels,
        time,
        names: layout.names.clone(),
    })
}

/// Reads a labeled CSV file.
///
/// Without a header the class is the last column, the time column (when
/// [`TimeColumn::Required`]) is the first, and features are named
/// `F0..F(d-1)`.
pub fn load_csv(
    path: impl AsRef<Path>,
    has_header: bool,
    class_column: &str,
    time_column: &TimeColumn,
) -> Result<LabeledDataset> {
    let table = read_table(path.as_ref(), has_header)?;
    let layout = resolve_layout(&table, Some(class_column), time_column)?;
    let parsed = parse_table(&table, &layout)?;
    LabeledDataset::new(
        parsed.features,
        parsed.labels.unwrap_or_default(),
        parsed.time,
        parsed.names,
    )
}

/// Reads a CSV file that has no class column (rows to be scored).
pub fn load_unlabeled_csv(
    path: impl AsRef<Path>,
    has_header: bool,
    time_column: &TimeColumn,
) -> Result<UnlabeledDataset> {
    let table = read_table(path.as_ref(), has_header)?;
    let layout = resolve_layout(&table, None, time_column)?;
    let parsed = parse_table(&table, &layout)?;
    Ok(UnlabeledDataset {
        features: parsed.features,
        time: parsed.time,
        feature_names: parsed.names,
    })
}

/// Returns the header cells of a CSV file.
pub fn read_header(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file);
    match reader.records().next() {
        Some(rec) => Ok(rec
            .map_err(|e| Error::Format {
                row: 1,
                col: None,
                message: e.to_string(),
            })?
            .iter()
            .map(|c| c.trim().to_string())
            .collect()),
        None => Ok(Vec::new()),
    }
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Renders a dataset as CSV text: `Time` first when present, `Class` last.
pub fn to_csv_string(dataset: &LabeledDataset) -> String {
    let mut out = String::new();
    let mut header: Vec<&str> = Vec::new();
    if dataset.time.is_some() {
        header.push(TIME_COLUMN);
    }
    header.extend(dataset.feature_names.iter().map(String::as_str));
    header.push(CLASS_COLUMN);
    out.push_str(&header.join(","));
    out.push('\n');
    for r in 0..dataset.len() {
        let mut cells = Vec::with_capacity(dataset.n_features() + 2);
        if let Some(t) = &dataset.time {
            cells.push(fmt_f64(t[r]));
        }
        cells.extend(dataset.features.row(r).iter().map(|&v| fmt_f64(v)));
        cells.push(dataset.labels[r].to_string());
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn save_csv(dataset: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), to_csv_string(dataset).as_bytes())
}

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::io(path, std::io::Error::other("path has no file name")))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Row-wise concatenation; schemas must match exactly.
pub fn concat_datasets(a: &LabeledDataset, b: &LabeledDataset) -> Result<LabeledDataset> {
    if a.feature_names != b.feature_names {
        return Err(Error::Schema(format!(
            "feature names differ: {:?} vs {:?}",
            a.feature_names, b.feature_names
        )));
    }
    let time = match (&a.time, &b.time) {
        (Some(x), Some(y)) => Some(x.iter().chain(y).copied().collect()),
        (None, None) => None,
        // an empty side carries no time values to disagree with
        (Some(x), None) if b.is_empty() => Some(x.clone()),
        (None, Some(y)) if a.is_empty() => Some(y.clone()),
        _ => {
            return Err(Error::Schema(
                "one dataset has a time column and the other does not".into(),
            ))
        }
    };
    LabeledDataset::new(
        a.features.vstack(&b.features)?,
        a.labels.iter().chain(&b.labels).copied().collect(),
        time,
        a.feature_names.clone(),
    )
}

/// Parameters of the latent-factor transaction generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub n_normal: usize,
    pub n_fraud: usize,
    pub feature_dim: usize,
    pub latent_dim: usize,
    /// Displacement of fraud rows along a unit direction orthogonal to the
    /// normal manifold.
    pub fraud_shift: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            n_normal: 2454,
            n_fraud: 2135,
            feature_dim: 20,
            latent_dim: 4,
            fraud_shift: 6.0,
            noise_std: 0.5,
            seed: 7,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.latent_dim >= self.feature_dim {
            return Err(Error::Parameter(format!(
                "latent dim {} must be below feature dim {}",
                self.latent_dim, self.feature_dim
            )));
        }
        if !(self.fraud_shift.is_finite() && self.fraud_shift >= 0.0) {
            return Err(Error::Parameter(format!(
                "fraud shift must be finite and non-negative, got {}",
                self.fraud_shift
            )));
        }
        if !(self.noise_std.is_finite() && self.noise_std > 0.0) {
            return Err(Error::Parameter(format!(
                "noise std must be positive, got {}",
                self.noise_std
            )));
        }
        Ok(())
    }
}

/// The hidden structure behind a generated dataset.
#[derive(Debug, Clone)]
pub struct GeneratorTruth {
    /// `d x l` loading matrix spanning the normal manifold.
    pub loadings: DataMatrix,
    /// Unit direction of the fraud displacement, orthogonal to the loadings.
    pub fraud_direction: Vec<f64>,
}

/// Generates a shuffled, seeded dataset; see [`generate_synthetic_with_truth`].
pub fn generate_synthetic(spec: &GeneratorSpec) -> Result<LabeledDataset> {
    generate_synthetic_with_truth(spec).map(|(d, _)| d)
}

/// Normal rows are `A z + e` with `z ~ N(0, I_l)` and `e ~ N(0, noise² I_d)`.
/// Fraud rows add `fraud_shift * u` for a unit `u` orthogonal to the columns
/// of `A`, and carry twice the noise. Rows are shuffled, then `Time` is
/// assigned as the row index.
pub fn generate_synthetic_with_truth(
    spec: &GeneratorSpec,
) -> Result<(LabeledDataset, GeneratorTruth)> {
    spec.validate()?;
    let d = spec.feature_dim;
    let l = spec.latent_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };

    let loadings_values: Vec<f64> = (0..d * l).map(|_| normal()).collect();
    let loadings = DataMatrix::new(d, l, loadings_values)?;

    // orthonormal basis of span(A), then u = normalized residual of a random draw
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(l + 1);
    for j in 0..l {
        let mut v = loadings.column(j);
        gram_schmidt_step(&mut v, &basis);
        basis.push(v);
    }
    let mut u: Vec<f64> = (0..d).map(|_| normal()).collect();
    gram_schmidt_step(&mut u, &basis);

    let total = spec.n_normal + spec.n_fraud;
    let mut rows: Vec<(Vec<f64>, u8)> = Vec::with_capacity(total);
    for i in 0..total {
        let is_fraud = i >= spec.n_normal;
        let z: Vec<f64> = (0..l).map(|_| normal()).collect();
        let noise = if is_fraud {
            2.0 * spec.noise_std
        } else {
            spec.noise_std
        };
        let row: Vec<f64> = (0..d)
            .map(|k| {
                let signal = dot(loadings.row(k), &z);
                let shift = if is_fraud { spec.fraud_shift * u[k] } else { 0.0 };
                signal + shift + noise * normal()
            })
            .collect();
        rows.push((row, u8::from(is_fraud)));
    }
    rows.shuffle(&mut rng);

    let mut values = Vec::with_capacity(total * d);
    let mut labels = Vec::with_capacity(total);
    for (row, label) in rows {
        values.extend(row);
        labels.push(label);
    }
    let dataset = LabeledDataset::new(
        DataMatrix::new(total, d, values)?,
        labels,
        Some((0..total).map(|i| i as f64).collect()),
        (1..=d).map(|i| format!("V{i}")).collect(),
    )?;
    Ok((
        dataset,
        GeneratorTruth {
            loadings,
            fraud_direction: u,
        },
    ))
}

// Removes the components of `v` along the orthonormal `basis` (twice, for
// stability) and normalizes.
fn gram_schmidt_step(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let p = dot(v, b);
            v.iter_mut().zip(b).for_each(|(x, bx)| *x -= p * bx);
        }
    }
    let norm = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn small(rows: &[[f64; 2]], labels: &[u8]) -> LabeledDataset {
        LabeledDataset::new(
            DataMatrix::from_rows(rows).unwrap(),
            labels.to_vec(),
            None,
            vec!["a".into(), "b".into()],
        )
        .unwrap()
    }

    #[test]
    fn loads_header_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "d.csv",
            "Time,F1,F2,Class\n0,1.5,2,0\n1,3,4,1\n2,5,6e-1,0\n",
        );
        let ds = load_csv(&p, true, "Class", &TimeColumn::default_name()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.labels, vec![0, 1, 0]);
        assert_eq!(ds.time, Some(vec![0.0, 1.0, 2.0]));
        assert_eq!(ds.feature_names, vec!["F1", "F2"]);
        assert_eq!(ds.features.row(2), &[5.0, 0.6]);
    }

    #[test]
    fn headerless_file_gets_positional_names() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "d.csv", "1,2,3,0\n4,5,6,1\n");
        let ds = load_csv(&p, false, "Class", &TimeColumn::default_name()).unwrap();
        assert_eq!(ds.feature_names, vec!["F0", "F1", "F2"]);
        assert_eq!(ds.labels, vec![0, 1]);
        assert!(ds.time.is_none());

        let ds = load_csv(&p, false, "Class", &TimeColumn::Required("Time".into())).unwrap();
        assert_eq!(ds.feature_names, vec!["F0", "F1"]);
        assert_eq!(ds.time, Some(vec![1.0, 4.0]));
    }

    #[test]
    fn ragged_rows_report_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "d.csv", "A,Class\n1,0\n2\n");
        match load_csv(&p, true, "Class", &TimeColumn::Absent) {
            Err(Error::Format { row: 3, col: None, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_cell_reports_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "d.csv", "A,B,Class\n1,2,0\n3,x,1\n");
        match load_csv(&p, true, "Class", &TimeColumn::Absent) {
            Err(Error::Format {
                row: 3,
                col: Some(2),
                ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_class_column_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "d.csv", "A,B\n1,2\n");
        assert!(matches!(
            load_csv(&p, true, "Class", &TimeColumn::Absent),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn out_of_domain_label() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "d.csv", "A,Class\n1,2\n");
        assert!(matches!(
            load_csv(&p, true, "Class", &TimeColumn::Absent),
            Err(Error::LabelDomain { .. })
        ));
    }

    #[test]
    fn unlabeled_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "d.csv", "Time,A,B\n0,1,2\n1,3,4\n");
        let ds = load_unlabeled_csv(&p, true, &TimeColumn::default_name()).unwrap();
        assert_eq!(ds.features.shape(), (2, 2));
        assert_eq!(ds.time, Some(vec![0.0, 1.0]));
    }

    #[test]
    fn concat_preserves_order() {
        let a = small(&[[1.0, 2.0], [3.0, 4.0]], &[0, 1]);
        let b = small(&[[5.0, 6.0], [7.0, 8.0], [9.0, 10.0]], &[1, 0, 0]);
        let c = concat_datasets(&a, &b).unwrap();
        assert_eq!(c.len(), 5);
        assert_eq!(c.labels, vec![0, 1, 1, 0, 0]);
        assert_eq!(c.features.row(2), &[5.0, 6.0]);

        let empty = LabeledDataset::new(
            DataMatrix::empty(2),
            vec![],
            None,
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        assert_eq!(concat_datasets(&a, &empty).unwrap(), a);
    }

    #[test]
    fn concat_rejects_schema_mismatch() {
        let a = small(&[[1.0, 2.0]], &[0]);
        let mut b = a.clone();
        b.feature_names = vec!["x".into(), "y".into()];
        assert!(matches!(concat_datasets(&a, &b), Err(Error::Schema(_))));
    }

    #[test]
    fn save_empty_dataset_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let ds = LabeledDataset::new(
            DataMatrix::empty(2),
            vec![],
            Some(vec![]),
            vec!["V1".into(), "V2".into()],
        )
        .unwrap();
        let p = dir.path().join("e.csv");
        save_csv(&ds, &p).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "Time,V1,V2,Class\n");
    }

    #[test]
    fn generator_counts_and_determinism() {
        let spec = GeneratorSpec {
            n_normal: 30,
            n_fraud: 0,
            seed: 3,
            ..GeneratorSpec::default()
        };
        let ds = generate_synthetic(&spec).unwrap();
        assert_eq!(ds.len(), 30);
        assert!(ds.labels.iter().all(|&l| l == 0));

        let spec = GeneratorSpec {
            n_normal: 50,
            n_fraud: 7,
            ..spec
        };
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.count_label(1), 7);
        let t = a.time.as_ref().unwrap();
        assert!(t.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn generator_rejects_latent_not_below_feature_dim() {
        let spec = GeneratorSpec {
            feature_dim: 4,
            latent_dim: 4,
            ..GeneratorSpec::default()
        };
        assert!(matches!(generate_synthetic(&spec), Err(Error::Parameter(_))));
    }

    #[test]
    fn fraud_direction_is_orthogonal_unit() {
        let (_, truth) = generate_synthetic_with_truth(&GeneratorSpec::default()).unwrap();
        let u = &truth.fraud_direction;
        assert!((dot(u, u) - 1.0).abs() < 1e-12);
        for j in 0..truth.loadings.cols() {
            assert!(dot(u, &truth.loadings.column(j)).abs() < 1e-10);
        }
    }
}
