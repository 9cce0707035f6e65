use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ISIC convention: Jaccard below this counts as unsegmented.
pub const DEFAULT_THRESHOLD: f64 = 0.650;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageScore {
    pub id: String,
    pub jaccard: f64,
}

/// Aggregate statistics of a set of Jaccard values at one threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    /// Population standard deviation (divides by N).
    pub std: f64,
    pub threshold: f64,
    pub success_count: usize,
    pub success_rate: f64,
}

/// Mean, median (average of the middle pair for even counts), population
/// std, and the fraction of values at or above `threshold`.
pub fn aggregate(values: &[f64], threshold: f64) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::EmptyInput("no Jaccard values to aggregate".into()));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidConfig(format!("threshold {threshold} outside [0, 1]")));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let success_count = values.iter().filter(|&&v| v >= threshold).count();
    Ok(Summary {
        count: n,
        mean,
        median,
        std,
        threshold,
        success_count,
        success_rate: success_count as f64 / n as f64,
    })
}

/// Per-image scores plus their [`Summary`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_image: Vec<ImageScore>,
    #[serde(flatten)]
    pub summary: Summary,
}

impl EvalReport {
    pub fn new(per_image: Vec<ImageScore>, threshold: f64) -> Result<Self> {
        let values: Vec<f64> = per_image.iter().map(|s| s.jaccard).collect();
        let summary = aggregate(&values, threshold)?;
        Ok(Self { per_image, summary })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,jaccard\n");
        for s in &self.per_image {
            writeln!(out, "{},{:.6}", s.id, s.jaccard).unwrap();
        }
        let sm = &self.summary;
        for (key, v) in [
            ("mean", sm.mean),
            ("median", sm.median),
            ("std", sm.std),
            ("success_rate", sm.success_rate),
        ] {
            writeln!(out, "{key},{v:.6}").unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::InvalidConfig(format!("unknown report format {other}"))),
        }
    }
}

pub fn write_report(report: &EvalReport, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    let body = match format {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Json => report.to_json(),
    };
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIGURE_VALUES: [f64; 4] = [0.943, 0.875, 0.271, 0.527];

    #[test]
    fn figure_values() {
        let s = aggregate(&FIGURE_VALUES, DEFAULT_THRESHOLD).unwrap();
        assert!((s.mean - 0.654).abs() < 1e-3);
        assert!((s.median - 0.701).abs() < 1e-3);
        assert!((s.std - 0.2717).abs() < 1e-3);
        assert_eq!(s.success_rate, 0.5);
    }

    #[test]
    fn success_rate_335_of_963() {
        let values: Vec<f64> = (0..963).map(|i| if i < 335 { 0.9 } else { 0.3 }).collect();
        let s = aggregate(&values, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(s.success_count, 335);
        assert!((s.success_rate * 100.0 - 34.787).abs() < 1e-3);
    }

    #[test]
    fn singleton_and_empty() {
        let s = aggregate(&[0.4], 0.65).unwrap();
        assert_eq!((s.mean, s.median, s.std, s.success_rate), (0.4, 0.4, 0.0, 0.0));
        assert!(matches!(aggregate(&[], 0.65), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn csv_layout() {
        let report = EvalReport::new(
            vec![
                ImageScore { id: "a".into(), jaccard: 1.0 / 7.0 },
                ImageScore { id: "b".into(), jaccard: 1.0 },
            ],
            0.65,
        )
        .unwrap();
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[0], "id,jaccard");
        assert_eq!(lines[1], "a,0.142857");
        assert_eq!(lines[6], "success_rate,0.500000");
    }

    #[test]
    fn json_roundtrip() {
        let report = EvalReport::new(vec![ImageScore { id: "x".into(), jaccard: 0.25 }], 0.65).unwrap();
        let parsed: EvalReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(parsed, report);
        let value: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(value["per_image"][0]["id"], "x");
        assert_eq!(value["success_count"], 0);
    }
}
