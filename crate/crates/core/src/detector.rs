//! Thresholds, threshold-based counting and per-class evaluation reports.
//!
//! Comparisons are strict: a normal row is correct only when its score is
//! `< t`, an anomaly is caught only when its score is `> t`, and scores equal
//! to `t` are reported as ties.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::data::fmt_f64;
use crate::error::{Error, Result};
use crate::scores::AnomalyScores;

/// How a threshold value was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdMethod {
    Manual,
    MeanPlusKStd { k: f64 },
    /// Linear-interpolation percentile, `p` in (0, 100).
    Percentile { p: f64 },
    /// Smallest cut leaving at most `rate` of the normal scores at or above it.
    MatchedMislabel { rate: f64 },
}

impl ThresholdMethod {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ThresholdMethod::Percentile { p } if !(p > 0.0 && p < 100.0) => Err(
                Error::Parameter(format!("percentile must be in (0, 100), got {p}")),
            ),
            ThresholdMethod::MeanPlusKStd { k } if !k.is_finite() => {
                Err(Error::Parameter(format!("k must be finite, got {k}")))
            }
            ThresholdMethod::MatchedMislabel { rate } if !(0.0..=1.0).contains(&rate) => Err(
                Error::Parameter(format!("mislabel rate must be in [0, 1], got {rate}")),
            ),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ThresholdMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdMethod::Manual => write!(f, "manual"),
            ThresholdMethod::MeanPlusKStd { k } => write!(f, "mean_plus_k_std({k})"),
            ThresholdMethod::Percentile { p } => write!(f, "percentile({p})"),
            ThresholdMethod::MatchedMislabel { rate } => write!(f, "matched_mislabel({rate})"),
        }
    }
}

impl FromStr for ThresholdMethod {
    type Err = Error;

    /// Parses `manual`, `mean_plus_k_std(1)`, `percentile(95)` or
    /// `matched_mislabel(0.01)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "manual" {
            return Ok(ThresholdMethod::Manual);
        }
        let (name, arg) = s
            .strip_suffix(')')
            .and_then(|body| body.split_once('('))
            .ok_or_else(|| Error::Parameter(format!("cannot parse threshold method {s:?}")))?;
        let value: f64 = arg
            .trim()
            .parse()
            .map_err(|_| Error::Parameter(format!("bad threshold argument {arg:?}")))?;
        let method = match name.trim() {
            "mean_plus_k_std" => ThresholdMethod::MeanPlusKStd { k: value },
            "percentile" => ThresholdMethod::Percentile { p: value },
            "matched_mislabel" => ThresholdMethod::MatchedMislabel { rate: value },
            other => {
                return Err(Error::Parameter(format!(
                    "unknown threshold method {other:?}"
                )))
            }
        };
        method.validate()?;
        Ok(method)
    }
}

/// A score cut plus where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    pub value: f64,
    pub method: ThresholdMethod,
    /// Name of the score set the statistic was computed on.
    pub source: String,
    /// Number of scores in that set (0 for manual thresholds).
    pub source_size: usize,
}

impl Threshold {
    pub fn manual(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Parameter(format!("threshold {value} is not finite")));
        }
        Ok(Self {
            value,
            method: ThresholdMethod::Manual,
            source: "manual".into(),
            source_size: 0,
        })
    }
}

/// Sample mean and (n − 1) standard deviation; a single score has std 0.
pub fn mean_and_std(scores: &[f64]) -> (f64, f64) {
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    if scores.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = scores.iter().map(|s| (s - mean) * (s - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Linear-interpolation percentile on sorted data: position `p/100 (n-1)`.
pub fn percentile(scores: &[f64], p: f64) -> f64 {
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Derives a threshold from the scores of known-normal rows.
pub fn derive_threshold(
    normal_scores: &AnomalyScores,
    method: ThresholdMethod,
    source: &str,
) -> Result<Threshold> {
    method.validate()?;
    if normal_scores.is_empty() {
        return Err(Error::Degenerate(
            "cannot derive a threshold from zero scores".into(),
        ));
    }
    let s = normal_scores.as_slice();
    let value = match method {
        ThresholdMethod::Manual => {
            return Err(Error::Parameter(
                "manual thresholds are built with Threshold::manual".into(),
            ))
        }
        ThresholdMethod::MeanPlusKStd { k } => {
            let (mean, std) = mean_and_std(s);
            mean + k * std
        }
        ThresholdMethod::Percentile { p } => percentile(s, p),
        ThresholdMethod::MatchedMislabel { rate } => {
            let mut sorted = s.to_vec();
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len();
            let allowed = ((rate * n as f64).floor() as usize).min(n - 1);
            // just above the (allowed+1)-th largest score: at most `allowed`
            // normal rows remain at or above the cut
            sorted[n - 1 - allowed].next_up()
        }
    };
    Ok(Threshold {
        value,
        method,
        source: source.to_string(),
        source_size: s.len(),
    })
}

pub fn count_below(scores: &AnomalyScores, t: &Threshold) -> usize {
    scores.iter().filter(|&s| s < t.value).count()
}

pub fn count_above(scores: &AnomalyScores, t: &Threshold) -> usize {
    scores.iter().filter(|&s| s > t.value).count()
}

pub fn count_equal(scores: &AnomalyScores, t: &Threshold) -> usize {
    scores.iter().filter(|&s| s == t.value).count()
}

/// Per-class outcome of one threshold on one pair of score sets.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub threshold: Threshold,
    pub normal_total: usize,
    pub normal_below: usize,
    pub normal_ties: usize,
    pub anomaly_total: usize,
    pub anomaly_above: usize,
    pub anomaly_ties: usize,
    pub normal_accuracy: f64,
    pub anomaly_accuracy: f64,
    pub normal_mislabel_rate: f64,
    pub fraud_capture_rate: f64,
}

impl EvaluationReport {
    pub fn normal_mislabeled(&self) -> usize {
        self.normal_total - self.normal_below
    }

    pub fn anomaly_missed(&self) -> usize {
        self.anomaly_total - self.anomaly_above
    }

    /// Fixed-width table in the "out of N total records" style.
    pub fn render_table(&self, title: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{title}");
        let _ = writeln!(
            out,
            "  threshold {} [{} on {} ({} scores)]",
            fmt_f64(self.threshold.value),
            self.threshold.method,
            self.threshold.source,
            self.threshold.source_size
        );
        let _ = writeln!(
            out,
            "  {:<8} {:>8} {:>10} {:>6} {:>10}",
            "class", "total", "correct", "ties", "rate"
        );
        let _ = writeln!(
            out,
            "  {:<8} {:>8} {:>10} {:>6} {:>10.6}",
            "normal", self.normal_total, self.normal_below, self.normal_ties, self.normal_accuracy
        );
        let _ = writeln!(
            out,
            "  {:<8} {:>8} {:>10} {:>6} {:>10.6}",
            "anomaly",
            self.anomaly_total,
            self.anomaly_above,
            self.anomaly_ties,
            self.fraud_capture_rate
        );
        let _ = writeln!(
            out,
            "  Out of {} total normal records, {} scored below the threshold ({} mislabeled, {:.4}%).",
            self.normal_total,
            self.normal_below,
            self.normal_mislabeled(),
            100.0 * self.normal_mislabel_rate
        );
        let _ = writeln!(
            out,
            "  Out of {} total anomaly records, {} scored above the threshold ({:.2}% captured).",
            self.anomaly_total,
            self.anomaly_above,
            100.0 * self.fraud_capture_rate
        );
        out
    }

    /// One `prefix.key=value` line per metric.
    pub fn render_key_values(&self, prefix: &str) -> String {
        let p = if prefix.is_empty() {
            String::new()
        } else {
            format!("{prefix}.")
        };
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{p}{k}={v}");
        };
        kv("threshold", fmt_f64(self.threshold.value));
        kv("threshold_method", self.threshold.method.to_string());
        kv("threshold_source", self.threshold.source.clone());
        kv("threshold_source_size", self.threshold.source_size.to_string());
        kv("normal_total", self.normal_total.to_string());
        kv("normal_below", self.normal_below.to_string());
        kv("normal_ties", self.normal_ties.to_string());
        kv("anomaly_total", self.anomaly_total.to_string());
        kv("anomaly_above", self.anomaly_above.to_string());
        kv("anomaly_ties", self.anomaly_ties.to_string());
        kv("normal_accuracy", fmt_f64(self.normal_accuracy));
        kv("anomaly_accuracy", fmt_f64(self.anomaly_accuracy));
        kv("normal_mislabel_rate", fmt_f64(self.normal_mislabel_rate));
        kv("fraud_capture_rate", fmt_f64(self.fraud_capture_rate));
        out
    }
}

/// Counts each class against `t` and derives the per-class rates.
pub fn evaluate(
    normal_scores: &AnomalyScores,
    anomaly_scores: &AnomalyScores,
    t: &Threshold,
) -> Result<EvaluationReport> {
    if normal_scores.is_empty() || anomaly_scores.is_empty() {
        return Err(Error::Degenerate(format!(
            "evaluation needs both classes, got {} normal and {} anomaly scores",
            normal_scores.len(),
            anomaly_scores.len()
        )));
    }
    let normal_total = normal_scores.len();
    let anomaly_total = anomaly_scores.len();
    let normal_below = count_below(normal_scores, t);
    let anomaly_above = count_above(anomaly_scores, t);
    let normal_accuracy = normal_below as f64 / normal_total as f64;
    let fraud_capture_rate = anomaly_above as f64 / anomaly_total as f64;
    Ok(EvaluationReport {
        threshold: t.clone(),
        normal_total,
        normal_below,
        normal_ties: count_equal(normal_scores, t),
        anomaly_total,
        anomaly_above,
        anomaly_ties: count_equal(anomaly_scores, t),
        normal_accuracy,
        anomaly_accuracy: fraud_capture_rate,
        normal_mislabel_rate: 1.0 - normal_accuracy,
        fraud_capture_rate,
    })
}

/// Two reports on the same rows, side by side. Deltas are `b - a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSummary {
    pub label_a: String,
    pub label_b: String,
    pub a: EvaluationReport,
    pub b: EvaluationReport,
    pub normal_accuracy_delta: f64,
    pub normal_mislabel_rate_delta: f64,
    pub fraud_capture_rate_delta: f64,
}

impl ComparisonSummary {
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "  {:<22} {:>14} {:>14} {:>14}",
            "metric", self.label_a, self.label_b, "delta (b - a)"
        );
        let rows = [
            ("threshold", self.a.threshold.value, self.b.threshold.value),
            ("normal_accuracy", self.a.normal_accuracy, self.b.normal_accuracy),
            (
                "normal_mislabel_rate",
                self.a.normal_mislabel_rate,
                self.b.normal_mislabel_rate,
            ),
            (
                "fraud_capture_rate",
                self.a.fraud_capture_rate,
                self.b.fraud_capture_rate,
            ),
        ];
        for (name, a, b) in rows {
            let _ = writeln!(out, "  {name:<22} {a:>14.6} {b:>14.6} {:>14.6}", b - a);
        }
        out
    }

    pub fn render_key_values(&self, prefix: &str) -> String {
        let mut out = self.a.render_key_values(&format!("{prefix}.{}", self.label_a));
        out.push_str(&self.b.render_key_values(&format!("{prefix}.{}", self.label_b)));
        let _ = writeln!(out, "{prefix}.delta.normal_accuracy={}", fmt_f64(self.normal_accuracy_delta));
        let _ = writeln!(
            out,
            "{prefix}.delta.normal_mislabel_rate={}",
            fmt_f64(self.normal_mislabel_rate_delta)
        );
        let _ = writeln!(
            out,
            "{prefix}.delta.fraud_capture_rate={}",
            fmt_f64(self.fraud_capture_rate_delta)
        );
        out
    }
}

/// Side-by-side rates; descriptive only.
pub fn compare(
    label_a: &str,
    a: &EvaluationReport,
    label_b: &str,
    b: &EvaluationReport,
) -> Result<ComparisonSummary> {
    if a.normal_total != b.normal_total || a.anomaly_total != b.anomaly_total {
        return Err(Error::Comparability(format!(
            "{label_a} saw {}/{} rows, {label_b} saw {}/{}",
            a.normal_total, a.anomaly_total, b.normal_total, b.anomaly_total
        )));
    }
    Ok(ComparisonSummary {
        label_a: label_a.to_string(),
        label_b: label_b.to_string(),
        a: a.clone(),
        b: b.clone(),
        normal_accuracy_delta: b.normal_accuracy - a.normal_accuracy,
        normal_mislabel_rate_delta: b.normal_mislabel_rate - a.normal_mislabel_rate,
        fraud_capture_rate_delta: b.fraud_capture_rate - a.fraud_capture_rate,
    })
}

/// Evaluates `n_points` thresholds evenly spaced from the smallest to the
/// largest score over both sets.
pub fn threshold_sweep(
    normal_scores: &AnomalyScores,
    anomaly_scores: &AnomalyScores,
    n_points: usize,
) -> Result<Vec<EvaluationReport>> {
    let lo = normal_scores
        .min()
        .into_iter()
        .chain(anomaly_scores.min())
        .reduce(f64::min)
        .ok_or_else(|| Error::Degenerate("sweep needs scores".into()))?;
    let hi = normal_scores
        .max()
        .into_iter()
        .chain(anomaly_scores.max())
        .reduce(f64::max)
        .unwrap_or(lo);
    (0..n_points)
        .map(|i| {
            let frac = if n_points > 1 {
                i as f64 / (n_points - 1) as f64
            } else {
                0.0
            };
            let t = Threshold::manual(lo + frac * (hi - lo))?;
            evaluate(normal_scores, anomaly_scores, &t)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub normal_count: usize,
    pub fraud_count: usize,
}

/// Equal-width bins spanning the smallest to the largest score of both
/// sets; the last bin includes its right edge.
pub fn histogram(
    normal_scores: &AnomalyScores,
    anomaly_scores: &AnomalyScores,
    bins: usize,
) -> Vec<HistogramBin> {
    let all = || normal_scores.iter().chain(anomaly_scores.iter());
    let (Some(lo), Some(hi)) = (all().reduce(f64::min), all().reduce(f64::max)) else {
        return Vec::new();
    };
    let bins = bins.max(1);
    let width = (hi - lo) / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            left: lo + i as f64 * width,
            right: if i + 1 == bins {
                hi
            } else {
                lo + (i + 1) as f64 * width
            },
            normal_count: 0,
            fraud_count: 0,
        })
        .collect();
    let bin_of = |s: f64| -> usize {
        if width > 0.0 {
            (((s - lo) / width) as usize).min(bins - 1)
        } else {
            0
        }
    };
    for s in normal_scores.iter() {
        out[bin_of(s)].normal_count += 1;
    }
    for s in anomaly_scores.iter() {
        out[bin_of(s)].fraud_count += 1;
    }
    out
}

pub fn histogram_csv(bins: &[HistogramBin]) -> String {
    let mut out = String::from("bin_left,bin_right,normal_count,fraud_count\n");
    for b in bins {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(b.left),
            fmt_f64(b.right),
            b.normal_count,
            b.fraud_count
        );
    }
    out
}
