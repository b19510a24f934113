//! CSV ingestion of a single positive numeric column.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub values: Vec<f64>,
    pub source_path: String,
    pub column: String,
    pub rejected_rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Descriptive {
    pub n: usize,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub mean: f64,
    pub sd: f64,
    pub q75: f64,
    pub max: f64,
}

/// Reads `column` from a headed CSV file. Bad rows are an error unless
/// `drop_bad` is set, in which case they are skipped and counted.
pub fn read_column(path: &Path, column: &str, drop_bad: bool) -> Result<Dataset, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Ingestion(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Ingestion(format!("cannot read header: {e}")))?
        .clone();
    let idx = headers
        .iter()
        .position(|h| h.trim() == column)
        .ok_or_else(|| CliError::Ingestion(format!("column '{column}' not found")))?;
    let mut values = Vec::new();
    let mut rejected = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Ingestion(format!("row {}: {e}", row + 2)))?;
        let raw = record.get(idx).unwrap_or("").trim();
        match raw.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => values.push(v),
            _ if drop_bad => rejected += 1,
            _ => {
                return Err(CliError::Ingestion(format!(
                    "row {}: '{raw}' is not a positive number (use --drop-nonpositive to skip)",
                    row + 2
                )))
            }
        }
    }
    if values.is_empty() {
        return Err(CliError::Ingestion(format!("no usable values in column '{column}'")));
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Dataset {
        name,
        values,
        source_path: path.display().to_string(),
        column: column.to_string(),
        rejected_rows: rejected,
    })
}

fn type7(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn describe(values: &[f64]) -> Descriptive {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let mean = s.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Descriptive {
        n,
        min: s[0],
        q25: type7(&s, 0.25),
        median: type7(&s, 0.5),
        mean,
        sd,
        q75: type7(&s, 0.75),
        max: s[n - 1],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn csv_file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_named_column() {
        let f = csv_file("id,x\n1,2.5\n2,0.5\n3,4\n");
        let d = read_column(f.path(), "x", false).unwrap();
        assert_eq!(d.values, vec![2.5, 0.5, 4.0]);
        assert_eq!(d.rejected_rows, 0);
    }

    #[test]
    fn bad_rows_fail_or_are_counted() {
        let f = csv_file("x\n1.0\n-2\nabc\n0\n3.0\n");
        assert!(matches!(read_column(f.path(), "x", false), Err(CliError::Ingestion(_))));
        let d = read_column(f.path(), "x", true).unwrap();
        assert_eq!(d.values, vec![1.0, 3.0]);
        assert_eq!(d.rejected_rows, 3);
    }

    #[test]
    fn empty_or_missing() {
        let f = csv_file("x\n");
        assert!(read_column(f.path(), "x", true).is_err());
        assert!(read_column(f.path(), "y", true).is_err());
    }

    #[test]
    fn descriptive_statistics() {
        let d = describe(&[4.0, 1.0, 3.0, 2.0]);
        assert_eq!((d.min, d.max, d.median), (1.0, 4.0, 2.5));
        assert_eq!((d.q25, d.q75), (1.75, 3.25));
        assert!((d.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
