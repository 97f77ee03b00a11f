//! Dataset ingestion and min-max scaling.
//!
//! Every learner in this crate works on features scaled to `[0, 1]`, so that
//! perturbation radii are fractions of each feature's range. [`load_csv`]
//! reads raw values, [`scale_features`] maps them onto the unit range and
//! returns the [`ScalingInfo`] needed to transform further data the same way.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unscaled numeric rows and binary labels, as read from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct RawData {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub feature_names: Vec<String>,
}

impl RawData {
    pub fn n_samples(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }
}

/// Feature matrix scaled to `[0, 1]` with binary labels.
///
/// Rows are stored contiguously; `value(i, j)` is feature `j` of sample `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    labels: Vec<u8>,
    feature_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from rows that are already in `[0, 1]`.
    ///
    /// Feature names default to `f0, f1, ...`. `n_features` is needed
    /// explicitly so that an empty dataset still knows its width.
    pub fn new(rows: &[Vec<f64>], labels: &[u8], n_features: usize) -> Result<Self> {
        let names = (0..n_features).map(|j| format!("f{j}")).collect();
        Self::with_names(rows, labels, names)
    }

    pub fn with_names(rows: &[Vec<f64>], labels: &[u8], feature_names: Vec<String>) -> Result<Self> {
        let p = feature_names.len();
        if p == 0 {
            return Err(Error::InvalidData("a dataset needs at least one feature".into()));
        }
        if rows.len() != labels.len() {
            return Err(Error::InvalidData(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let mut values = Vec::with_capacity(rows.len() * p);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::InvalidData(format!(
                    "row {i} has {} values, expected {p}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidData(format!(
                        "value {v} at row {i}, feature {j} is outside [0, 1]"
                    )));
                }
            }
            values.extend_from_slice(row);
        }
        if let Some(i) = labels.iter().position(|&y| y > 1) {
            return Err(Error::InvalidData(format!("label {} at row {i} is not 0 or 1", labels[i])));
        }
        Ok(Dataset {
            values,
            labels: labels.to_vec(),
            feature_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_features();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_features() + j]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks(self.n_features())
    }

    /// Number of samples per class, `[class 0, class 1]`.
    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&y| y == 1).count();
        [self.labels.len() - ones, ones]
    }

    /// The more frequent label; ties go to class 0.
    pub fn majority_label(&self) -> u8 {
        let [zeros, ones] = self.class_counts();
        u8::from(ones > zeros)
    }

    /// Fraction of samples carrying the majority label (1 for an empty set).
    pub fn majority_fraction(&self) -> f64 {
        let n = self.n_samples();
        if n == 0 {
            return 1.0;
        }
        let [zeros, ones] = self.class_counts();
        zeros.max(ones) as f64 / n as f64
    }

    /// A new dataset holding the given samples, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let p = self.n_features();
        let mut values = Vec::with_capacity(indices.len() * p);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            values.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            values,
            labels,
            feature_names: self.feature_names.clone(),
        }
    }
}

/// Per-feature range of the raw data, used to scale and unscale values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingInfo {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Constant features; they are mapped to 0.5.
    pub degenerate: Vec<bool>,
    pub feature_names: Vec<String>,
}

impl ScalingInfo {
    pub fn n_features(&self) -> usize {
        self.min.len()
    }

    pub fn scale_value(&self, j: usize, raw: f64) -> f64 {
        if self.degenerate[j] {
            0.5
        } else {
            ((raw - self.min[j]) / (self.max[j] - self.min[j])).clamp(0.0, 1.0)
        }
    }

    pub fn unscale_value(&self, j: usize, scaled: f64) -> f64 {
        if self.degenerate[j] {
            self.min[j]
        } else {
            self.min[j] + scaled * (self.max[j] - self.min[j])
        }
    }

    /// Scales new raw data with this (training) range. Values outside the
    /// training range are clamped to `[0, 1]`.
    pub fn apply(&self, raw: &RawData) -> Result<Dataset> {
        if raw.n_features() != self.n_features() {
            return Err(Error::InvalidData(format!(
                "data has {} features, scaling expects {}",
                raw.n_features(),
                self.n_features()
            )));
        }
        check_finite(raw)?;
        let rows: Vec<Vec<f64>> = raw
            .rows
            .iter()
            .map(|row| row.iter().enumerate().map(|(j, &v)| self.scale_value(j, v)).collect())
            .collect();
        Dataset::with_names(&rows, &raw.labels, raw.feature_names.clone())
    }

    /// Maps a scaled dataset back to raw units.
    pub fn invert(&self, data: &Dataset) -> Vec<Vec<f64>> {
        data.rows()
            .map(|row| row.iter().enumerate().map(|(j, &v)| self.unscale_value(j, v)).collect())
            .collect()
    }
}

fn check_finite(raw: &RawData) -> Result<()> {
    for (i, row) in raw.rows.iter().enumerate() {
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite value {} at row {i}, feature {j}",
                row[j]
            )));
        }
    }
    Ok(())
}

/// Min-max scales every feature to `[0, 1]`.
///
/// Constant features carry no information for a split; they become 0.5 and
/// are flagged in the returned [`ScalingInfo`].
pub fn scale_features(raw: &RawData) -> Result<(Dataset, ScalingInfo)> {
    check_finite(raw)?;
    let p = raw.n_features();
    let mut min = vec![f64::INFINITY; p];
    let mut max = vec![f64::NEG_INFINITY; p];
    for row in &raw.rows {
        if row.len() != p {
            return Err(Error::InvalidData(format!("ragged row: {} values, expected {p}", row.len())));
        }
        for (j, &v) in row.iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    let degenerate: Vec<bool> = (0..p).map(|j| !(max[j] > min[j])).collect();
    for j in 0..p {
        if degenerate[j] && !min[j].is_finite() {
            // empty data: no range at all
            min[j] = 0.0;
            max[j] = 0.0;
        }
    }
    let info = ScalingInfo {
        min,
        max,
        degenerate,
        feature_names: raw.feature_names.clone(),
    };
    let data = info.apply(raw)?;
    Ok((data, info))
}

/// Reads a CSV file with a header row; the last column is the binary label.
pub fn load_csv(path: impl AsRef<Path>) -> Result<RawData> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    read_csv(file, path)
}

/// Same as [`load_csv`] but from any reader; `origin` only labels errors.
pub fn read_csv<R: std::io::Read>(reader: R, origin: &Path) -> Result<RawData> {
    let csv_err = |line: u64, message: String| Error::Csv {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_err(1, e.to_string()))?.clone();
    if header.len() < 2 {
        return Err(csv_err(1, "need at least one feature column and a label column".into()));
    }
    let width = header.len();
    let feature_names: Vec<String> = header.iter().take(width - 1).map(str::to_string).collect();

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        if record.len() != width {
            return Err(csv_err(
                line,
                format!("ragged row: {} fields, header has {width}", record.len()),
            ));
        }
        let mut row = Vec::with_capacity(width - 1);
        for (j, field) in record.iter().take(width - 1).enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                csv_err(line, format!("column {} ({}): `{field}` is not numeric", j + 1, header[j].to_string()))
            })?;
            row.push(v);
        }
        let raw_label = &record[width - 1];
        let label = match raw_label.parse::<f64>() {
            Ok(v) if v == 0.0 => 0,
            Ok(v) if v == 1.0 => 1,
            _ => {
                return Err(csv_err(
                    line,
                    format!("row {}: label `{raw_label}` is not 0 or 1", labels.len() + 1),
                ))
            }
        };
        rows.push(row);
        labels.push(label);
    }
    Ok(RawData {
        rows,
        labels,
        feature_names,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RawData> {
        read_csv(text.as_bytes(), Path::new("test.csv"))
    }

    #[test]
    fn reads_rows_in_order() {
        let raw = parse("f1,label\n0.5,1\n2,0\n-1,1\n").unwrap();
        assert_eq!(raw.rows, vec![vec![0.5], vec![2.0], vec![-1.0]]);
        assert_eq!(raw.labels, vec![1, 0, 1]);
        assert_eq!(raw.feature_names, vec!["f1"]);
    }

    #[test]
    fn header_only_is_empty() {
        let raw = parse("a,b,label\n").unwrap();
        assert_eq!(raw.n_samples(), 0);
        let (data, _) = scale_features(&raw).unwrap();
        assert_eq!(data.n_samples(), 0);
        assert_eq!(data.n_features(), 2);
    }

    #[test]
    fn rejects_bad_label_with_row() {
        let err = parse("f1,label\n0.1,0\n0.2,2\n").unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn rejects_non_numeric_and_ragged() {
        let err = parse("f1,f2,label\n0.1,x,0\n").unwrap_err().to_string();
        assert!(err.contains("column 2"), "{err}");
        assert!(parse("f1,f2,label\n0.1,0\n").is_err());
    }

    #[test]
    fn min_max_scaling() {
        let raw = RawData {
            rows: vec![vec![2.0, 5.0, 0.0], vec![4.0, 5.0, 0.3], vec![6.0, 5.0, 1.0]],
            labels: vec![0, 1, 0],
            feature_names: vec!["a".into(), "b".into(), "c".into()],
        };
        let (data, info) = scale_features(&raw).unwrap();
        let col = |j| (0..3).map(|i| data.value(i, j)).collect::<Vec<_>>();
        assert_eq!(col(0), vec![0.0, 0.5, 1.0]);
        assert_eq!(col(1), vec![0.5, 0.5, 0.5]);
        assert!(info.degenerate[1] && !info.degenerate[0]);
        for (a, b) in col(2).iter().zip([0.0, 0.3, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_nan() {
        let raw = RawData {
            rows: vec![vec![f64::NAN]],
            labels: vec![0],
            feature_names: vec!["a".into()],
        };
        assert!(scale_features(&raw).is_err());
    }

    #[test]
    fn apply_clamps_out_of_range() {
        let raw = RawData {
            rows: vec![vec![0.0], vec![10.0]],
            labels: vec![0, 1],
            feature_names: vec!["a".into()],
        };
        let (_, info) = scale_features(&raw).unwrap();
        let test = RawData {
            rows: vec![vec![-5.0], vec![15.0], vec![5.0]],
            labels: vec![0, 1, 1],
            feature_names: vec!["a".into()],
        };
        let scaled = info.apply(&test).unwrap();
        assert_eq!(scaled.row(0), &[0.0]);
        assert_eq!(scaled.row(1), &[1.0]);
        assert_eq!(scaled.row(2), &[0.5]);
    }
}
