//! Benchmark harness: synthetic blob cells (samples x features) trained with
//! the fixed protocol, repeated over seeds and summarised as mean and std.

use std::fmt::Write as _;
use std::time::Instant;

use crate::data::{make_blobs, split, BlobSpec, Scaler};
use crate::error::{Result, SomError};
use crate::grid::{GridTopology, TopologyKind};
use crate::som::{SomModel, TrainConfig};

/// Cells above either bound only run with `large` set.
pub const LARGE_CELL_VALUES: usize = 1_000_000;
pub const LARGE_MAP_NEURONS: usize = 2_000;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchPlan {
    pub sample_sizes: Vec<usize>,
    pub feature_counts: Vec<usize>,
    pub rows: usize,
    pub cols: usize,
    pub topology: TopologyKind,
    pub runs: usize,
    pub seed0: u64,
    pub test_fraction: f64,
    pub n_centers: usize,
    pub cluster_std: f64,
    pub center_box: (f64, f64),
    /// Epochs, schedules and update mode. The seed is replaced per run.
    pub train: TrainConfig,
    pub large: bool,
}

impl Default for BenchPlan {
    fn default() -> Self {
        Self {
            sample_sizes: vec![240, 4000],
            feature_counts: vec![4, 50],
            rows: 25,
            cols: 15,
            topology: TopologyKind::Rectangular,
            runs: 3,
            seed0: 0,
            test_fraction: 0.2,
            n_centers: 3,
            cluster_std: 1.0,
            center_box: (-10.0, 10.0),
            train: TrainConfig::default(),
            large: false,
        }
    }
}

impl BenchPlan {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(SomError::Config("runs must be >= 1".into()));
        }
        if self.sample_sizes.is_empty() || self.feature_counts.is_empty() {
            return Err(SomError::Config("plan needs at least one sample size and one feature count".into()));
        }
        if self.sample_sizes.contains(&0) || self.feature_counts.contains(&0) {
            return Err(SomError::Config("sample sizes and feature counts must be positive".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(SomError::Config(format!("test fraction must be in (0, 1), got {}", self.test_fraction)));
        }
        GridTopology::new(self.topology, self.rows, self.cols)?;
        self.train.validate()?;
        if !self.large {
            if self.rows * self.cols > LARGE_MAP_NEURONS {
                return Err(SomError::Config(format!(
                    "{}x{} map exceeds {LARGE_MAP_NEURONS} neurons; pass --large to run it",
                    self.rows, self.cols
                )));
            }
            for &n in &self.sample_sizes {
                for &k in &self.feature_counts {
                    if n * k > LARGE_CELL_VALUES {
                        return Err(SomError::Config(format!(
                            "cell {n}x{k} exceeds {LARGE_CELL_VALUES} values; pass --large to run it"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn blob_spec(&self, samples: usize, features: usize, seed: u64) -> BlobSpec {
        BlobSpec {
            n_samples: samples,
            n_features: features,
            n_centers: self.n_centers,
            cluster_std: self.cluster_std,
            center_box: self.center_box,
            seed,
        }
    }
}

/// Outcome of one seeded run of a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunResult {
    pub qe: f64,
    pub te: f64,
    pub init_seconds: f64,
    pub train_seconds: f64,
    pub metrics_seconds: f64,
}

/// Blobs, split, train-fitted z-scoring, PCA init, training, then QE and TE
/// on the held-out split.
pub fn run_cell(plan: &BenchPlan, samples: usize, features: usize, run: usize) -> Result<RunResult> {
    let seed = plan.seed0.wrapping_add(run as u64);
    let data = make_blobs(&plan.blob_spec(samples, features, seed))?;
    let (train, test) = split(&data, plan.test_fraction, seed)?;
    let scaler = Scaler::fit(&train)?;
    let (train, test) = (scaler.transform(&train)?, scaler.transform(&test)?);
    let topo = GridTopology::new(plan.topology, plan.rows, plan.cols)?;

    let t0 = Instant::now();
    let mut model = SomModel::init_pca(topo, features, &train)?.model;
    let init_seconds = t0.elapsed().as_secs_f64();

    let cfg = TrainConfig {
        seed,
        ..plan.train.clone()
    };
    let report = model.fit(&train, &cfg)?;

    let t1 = Instant::now();
    let qe = model.quantization_error(&test)?;
    let te = model.topographic_error(&test, cfg.d_th)?;
    let eval = t1.elapsed().as_secs_f64();
    Ok(RunResult {
        qe,
        te,
        init_seconds,
        train_seconds: report.train_seconds(),
        metrics_seconds: report.metrics_seconds + eval,
    })
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        if values.is_empty() {
            return Stat::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Stat { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub samples: usize,
    pub features: usize,
    pub runs: usize,
    pub qe: Stat,
    pub te: Stat,
    pub time_init: Stat,
    pub time_train: Stat,
    pub time_metrics: Stat,
    /// Error message of a cell that could not be run.
    pub failure: Option<String>,
}

impl BenchRow {
    fn failed(samples: usize, features: usize, message: String) -> Self {
        BenchRow {
            samples,
            features,
            runs: 0,
            qe: Stat::default(),
            te: Stat::default(),
            time_init: Stat::default(),
            time_train: Stat::default(),
            time_metrics: Stat::default(),
            failure: Some(message),
        }
    }

    pub fn from_runs(samples: usize, features: usize, runs: &[RunResult]) -> Self {
        let col = |f: fn(&RunResult) -> f64| Stat::of(&runs.iter().map(f).collect::<Vec<_>>());
        BenchRow {
            samples,
            features,
            runs: runs.len(),
            qe: col(|r| r.qe),
            te: col(|r| r.te),
            time_init: col(|r| r.init_seconds),
            time_train: col(|r| r.train_seconds),
            time_metrics: col(|r| r.metrics_seconds),
            failure: None,
        }
    }
}

/// Runs every cell in order. `progress` sees each finished row.
pub fn run_plan_with(plan: &BenchPlan, mut progress: impl FnMut(&BenchRow)) -> Result<Vec<BenchRow>> {
    plan.validate()?;
    let mut rows = Vec::new();
    for &samples in &plan.sample_sizes {
        for &features in &plan.feature_counts {
            let runs: Result<Vec<RunResult>> = (0..plan.runs).map(|r| run_cell(plan, samples, features, r)).collect();
            let row = match runs {
                Ok(runs) => BenchRow::from_runs(samples, features, &runs),
                Err(e) => BenchRow::failed(samples, features, e.to_string()),
            };
            progress(&row);
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn run_plan(plan: &BenchPlan) -> Result<Vec<BenchRow>> {
    run_plan_with(plan, |_| {})
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    AlignedText,
}

const CSV_HEADER: &str = "samples,features,runs,qe_mean,qe_std,te_mean,te_std,time_init_mean,time_init_std,\
time_train_mean,time_train_std,time_metrics_mean,time_metrics_std,status";

pub fn render_table(rows: &[BenchRow], format: TableFormat) -> String {
    match format {
        TableFormat::Csv => render_csv(rows),
        TableFormat::AlignedText => render_text(rows),
    }
}

fn render_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let status = match &r.failure {
            None => "ok".to_string(),
            Some(msg) => format!("\"failed: {}\"", msg.replace('"', "\"\"")),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.samples,
            r.features,
            r.runs,
            r.qe.mean,
            r.qe.std,
            r.te.mean,
            r.te.std,
            r.time_init.mean,
            r.time_init.std,
            r.time_train.mean,
            r.time_train.std,
            r.time_metrics.mean,
            r.time_metrics.std,
            status
        );
    }
    out
}

fn render_text(rows: &[BenchRow]) -> String {
    let header = ["Samples", "Features", "QE", "TE", "Init (s)", "Train (s)", "Metrics (s)"];
    let cells: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            if let Some(msg) = &r.failure {
                let failed = format!("failed: {msg}");
                return [r.samples.to_string(), r.features.to_string(), failed, String::new(), String::new(), String::new(), String::new()];
            }
            [
                r.samples.to_string(),
                r.features.to_string(),
                format!("{:.2} ± {:.2}", r.qe.mean, r.qe.std),
                format!("{:.0}% ± {:.0}%", r.te.mean * 100.0, r.te.std * 100.0),
                format!("{:.2} ± {:.2}", r.time_init.mean, r.time_init.std),
                format!("{:.2} ± {:.2}", r.time_train.mean, r.time_train.std),
                format!("{:.2} ± {:.2}", r.time_metrics.mean, r.time_metrics.std),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |fields: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = fields
            .zip(&widths)
            .map(|(f, &w)| format!("{}{f}", " ".repeat(w - f.chars().count())))
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = line(&mut header.iter().copied());
    out.push('\n');
    out.push_str(&widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().join("  "));
    out.push('\n');
    for row in &cells {
        out.push_str(&line(&mut row.iter().map(String::as_str)));
        out.push('\n');
    }
    out
}

/// Reads back the CSV produced by [`render_table`].
pub fn parse_csv(text: &str) -> Result<Vec<BenchRow>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| SomError::Input(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(SomError::Input("not a benchmark table".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let bad = |m: String| SomError::Input(format!("benchmark table row {}: {m}", i + 1));
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let int = |j: usize| rec[j].parse::<usize>().map_err(|_| bad(format!("bad integer '{}'", &rec[j])));
        let real = |j: usize| rec[j].parse::<f64>().map_err(|_| bad(format!("bad number '{}'", &rec[j])));
        let stat = |j: usize| -> Result<Stat> { Ok(Stat { mean: real(j)?, std: real(j + 1)? }) };
        let failure = match &rec[13] {
            "ok" => None,
            s => Some(s.strip_prefix("failed: ").unwrap_or(s).to_string()),
        };
        rows.push(BenchRow {
            samples: int(0)?,
            features: int(1)?,
            runs: int(2)?,
            qe: stat(3)?,
            te: stat(5)?,
            time_init: stat(7)?,
            time_train: stat(9)?,
            time_metrics: stat(11)?,
            failure,
        });
    }
    Ok(rows)
}
