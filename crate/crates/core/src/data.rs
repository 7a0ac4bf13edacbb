//! Datasets: an `N x k` feature matrix with optional regression target and
//! class labels, CSV ingestion, synthetic blobs, standardization and splits.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SomError};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n_rows: usize,
    n_features: usize,
    target: Option<Vec<f64>>,
    labels: Option<Vec<usize>>,
    feature_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from a row-major feature buffer. Every value must be
    /// finite.
    pub fn new(features: Vec<f64>, n_features: usize) -> Result<Self> {
        if n_features == 0 {
            return Err(SomError::Input("dataset needs at least one feature".into()));
        }
        if features.len() % n_features != 0 {
            return Err(SomError::Shape {
                expected: n_features,
                actual: features.len() % n_features,
            });
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(SomError::Input(format!(
                "non-finite value in row {}, feature {}",
                pos / n_features,
                pos % n_features
            )));
        }
        let n_rows = features.len() / n_features;
        Ok(Self {
            features,
            n_rows,
            n_features,
            target: None,
            labels: None,
            feature_names: (0..n_features).map(|j| format!("x{j}")).collect(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != k) {
            return Err(SomError::Input(format!(
                "row {bad} has {} values, expected {k}",
                rows[bad].len()
            )));
        }
        Self::new(rows.concat(), k.max(1)).and_then(|d| {
            if k == 0 && !rows.is_empty() {
                Err(SomError::Input("rows have no features".into()))
            } else {
                Ok(d)
            }
        })
    }

    pub fn with_target(mut self, target: Vec<f64>) -> Result<Self> {
        if target.len() != self.n_rows {
            return Err(SomError::Shape {
                expected: self.n_rows,
                actual: target.len(),
            });
        }
        if target.iter().any(|v| !v.is_finite()) {
            return Err(SomError::Input("target contains non-finite values".into()));
        }
        self.target = Some(target);
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n_rows {
            return Err(SomError::Shape {
                expected: self.n_rows,
                actual: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features {
            return Err(SomError::Shape {
                expected: self.n_features,
                actual: names.len(),
            });
        }
        self.feature_names = names;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.n_rows
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows == 0
    }

    pub fn dim(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.n_features)
    }

    /// Row-major feature buffer.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn target(&self) -> Option<&[f64]> {
        self.target.as_deref()
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Column `j` as an owned vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// New dataset holding the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            features,
            n_rows: indices.len(),
            n_features: self.n_features,
            target: self.target.as_ref().map(|t| indices.iter().map(|&i| t[i]).collect()),
            labels: self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect()),
            feature_names: self.feature_names.clone(),
        }
    }

    fn with_features(&self, features: Vec<f64>) -> Dataset {
        Dataset {
            features,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_centers: usize,
    pub cluster_std: f64,
    pub center_box: (f64, f64),
    pub seed: u64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        Self {
            n_samples: 240,
            n_features: 4,
            n_centers: 3,
            cluster_std: 1.0,
            center_box: (-10.0, 10.0),
            seed: 0,
        }
    }
}

impl BlobSpec {
    pub fn new(n_samples: usize, n_features: usize, seed: u64) -> Self {
        Self {
            n_samples,
            n_features,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.n_features == 0 || self.n_centers == 0 {
            return Err(SomError::Parameter(
                "blob sample, feature and center counts must be positive".into(),
            ));
        }
        if !(self.cluster_std >= 0.0) || !self.cluster_std.is_finite() {
            return Err(SomError::Parameter(format!(
                "cluster_std must be a finite non-negative number, got {}",
                self.cluster_std
            )));
        }
        let (lo, hi) = self.center_box;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(SomError::Parameter(format!("invalid center box [{lo}, {hi}]")));
        }
        Ok(())
    }
}

/// Isotropic Gaussian blobs. Labels hold the generating center of each sample.
pub fn make_blobs(spec: &BlobSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (lo, hi) = spec.center_box;
    let k = spec.n_features;
    let centers: Vec<f64> = (0..spec.n_centers * k).map(|_| rng.random_range(lo..hi)).collect();
    let mut features = Vec::with_capacity(spec.n_samples * k);
    let mut labels = Vec::with_capacity(spec.n_samples);
    for _ in 0..spec.n_samples {
        let c = rng.random_range(0..spec.n_centers);
        labels.push(c);
        for j in 0..k {
            let z: f64 = rng.sample(StandardNormal);
            features.push(centers[c * k + j] + spec.cluster_std * z);
        }
    }
    Dataset::new(features, k)?.with_labels(labels)
}

/// Names of the optional target and label columns in a CSV file. All other
/// columns are features.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CsvOptions {
    pub target: Option<String>,
    pub label: Option<String>,
}

pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| SomError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    read_csv(file, path, options)
}

/// Parses CSV text; `origin` is used in error messages only.
pub fn read_csv<R: Read>(reader: R, origin: &Path, options: &CsvOptions) -> Result<Dataset> {
    let csv_err = |message: String| SomError::Csv {
        path: origin.to_path_buf(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    let find = |name: &Option<String>| -> Result<Option<usize>> {
        match name {
            None => Ok(None),
            Some(n) => headers
                .iter()
                .position(|h| h == n)
                .map(Some)
                .ok_or_else(|| csv_err(format!("column '{n}' not found in header"))),
        }
    };
    let target_col = find(&options.target)?;
    let label_col = find(&options.label)?;
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&c| Some(c) != target_col && Some(c) != label_col)
        .collect();
    if feature_cols.is_empty() {
        return Err(csv_err("no feature columns".into()));
    }

    let mut features = Vec::new();
    let mut target = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_err(format!("row {row}: {e}")))?;
        if record.len() != headers.len() {
            return Err(csv_err(format!(
                "row {row} has {} fields, header has {}",
                record.len(),
                headers.len()
            )));
        }
        let cell = |col: usize| -> Result<f64> {
            let raw = &record[col];
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(SomError::CsvCell {
                    path: origin.to_path_buf(),
                    row,
                    col: col + 1,
                    message: format!("cannot parse '{raw}' as a finite number"),
                }),
            }
        };
        for &c in &feature_cols {
            features.push(cell(c)?);
        }
        if let Some(c) = target_col {
            target.push(cell(c)?);
        }
        if let Some(c) = label_col {
            let v = cell(c)?;
            if v < 0.0 || v.fract() != 0.0 {
                return Err(SomError::CsvCell {
                    path: origin.to_path_buf(),
                    row,
                    col: c + 1,
                    message: format!("label '{v}' is not a non-negative integer"),
                });
            }
            labels.push(v as usize);
        }
    }
    let names = feature_cols.iter().map(|&c| headers[c].clone()).collect();
    let mut ds = Dataset::new(features, feature_cols.len())?.with_feature_names(names)?;
    if target_col.is_some() {
        ds = ds.with_target(target)?;
    }
    if label_col.is_some() {
        ds = ds.with_labels(labels)?;
    }
    Ok(ds)
}

/// Writes features, then `target` and `label` columns when present. Floats
/// use Rust's shortest round-trip formatting, so a reload is exact.
pub fn write_csv<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = data.feature_names.iter().map(String::as_str).collect();
    if data.target.is_some() {
        header.push("target");
    }
    if data.labels.is_some() {
        header.push("label");
    }
    let io = |e: csv::Error| SomError::Io(std::io::Error::other(e));
    w.write_record(&header).map_err(io)?;
    for i in 0..data.len() {
        let mut rec: Vec<String> = data.row(i).iter().map(f64::to_string).collect();
        if let Some(t) = &data.target {
            rec.push(t[i].to_string());
        }
        if let Some(l) = &data.labels {
            rec.push(l[i].to_string());
        }
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(data, std::io::BufWriter::new(file))
}

/// Per-feature z-score parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Features with zero variance; these map to 0.
    pub constant: Vec<bool>,
}

impl Scaler {
    pub fn fit(data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(SomError::Input("cannot standardize an empty dataset".into()));
        }
        let n = data.len() as f64;
        let k = data.dim();
        let mut mean = vec![0.0; k];
        for r in data.rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; k];
        for r in data.rows() {
            for j in 0..k {
                let d = r[j] - mean[j];
                var[j] += d * d;
            }
        }
        let std: Vec<f64> = var.iter().map(|v| (v / n).sqrt()).collect();
        let constant = std.iter().map(|&s| s == 0.0).collect();
        Ok(Self { mean, std, constant })
    }

    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        self.apply(data, |v, j| {
            if self.constant[j] {
                0.0
            } else {
                (v - self.mean[j]) / self.std[j]
            }
        })
    }

    /// Constant features come back as their mean.
    pub fn inverse_transform(&self, data: &Dataset) -> Result<Dataset> {
        self.apply(data, |v, j| v * self.std[j] + self.mean[j])
    }

    fn apply(&self, data: &Dataset, f: impl Fn(f64, usize) -> f64) -> Result<Dataset> {
        let k = self.mean.len();
        if data.dim() != k {
            return Err(SomError::Shape {
                expected: k,
                actual: data.dim(),
            });
        }
        let out = data
            .rows()
            .flat_map(|r| r.iter().enumerate().map(|(j, &v)| f(v, j)))
            .collect();
        Ok(data.with_features(out))
    }
}

pub fn standardize(data: &Dataset) -> Result<(Dataset, Scaler)> {
    let scaler = Scaler::fit(data)?;
    Ok((scaler.transform(data)?, scaler))
}

/// Seeded shuffled split into `(train, test)` index lists. The test side gets
/// `ceil(test_fraction * N)` rows.
pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(SomError::Parameter(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n_test = ((test_fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = idx.split_off(n - n_test.min(n));
    Ok((idx, test))
}

pub fn split(data: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(data.len(), test_fraction, seed)?;
    Ok((data.select(&train), data.select(&test)))
}
