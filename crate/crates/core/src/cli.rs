//! `somkit` command line: train, map, cluster, collect and bench.
//!
//! Settings come from built-in defaults, then an optional `--config` file of
//! `key = value` lines, then flags. The merged result is written to
//! `config.txt` in the output directory and can be fed back via `--config`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::analysis::{self, MapLayer, NeuronBuffer, Stat};
use crate::bench::{self, BenchPlan, TableFormat};
use crate::clustering::{self, Algorithm, ClusterSpace, SpaceKind};
use crate::data::{self, BlobSpec, CsvOptions, Dataset, Scaler};
use crate::error::{Result, SomError};
use crate::grid::{GridTopology, TopologyKind};
use crate::kernels::{FeatureDistance, NeighborhoodKernel, ScheduleKind};
use crate::render::{self, RenderStyle, Series};
use crate::som::{self, SomModel, TrainConfig, UpdateMode};

pub const THREADS_ENV: &str = "SOMKIT_THREADS";

/// Every accepted key with its default.
const KEYS: &[(&str, &str)] = &[
    ("run.id", "som"),
    ("run.seed", "0"),
    ("data.path", ""),
    ("data.target", ""),
    ("data.label", ""),
    ("data.standardize", "false"),
    ("blobs.n_samples", "240"),
    ("blobs.n_features", "4"),
    ("blobs.n_centers", "3"),
    ("blobs.cluster_std", "1"),
    ("blobs.center_min", "-10"),
    ("blobs.center_max", "10"),
    ("map.rows", "10"),
    ("map.cols", "10"),
    ("map.topology", "rect"),
    ("map.init", "pca"),
    ("model.path", ""),
    ("train.epochs", "100"),
    ("train.lr0", "0.5"),
    ("train.sigma0", "4"),
    ("train.lr_schedule", "linear"),
    ("train.sigma_schedule", "inverse"),
    ("train.update_mode", "batch"),
    ("train.kernel", "gaussian"),
    ("train.metric", "euclidean"),
    ("train.d_th", "1"),
    ("train.gamma", ""),
    ("analysis.types", "umatrix,hit"),
    ("collect.query", ""),
    ("collect.query_row", ""),
    ("collect.min_samples", "10"),
    ("collect.max_order", "3"),
    ("cluster.space", "weights"),
    ("cluster.position_weight", "1"),
    ("cluster.algorithm", "kmeans"),
    ("cluster.k", "3"),
    ("cluster.elbow", "false"),
    ("cluster.k_min", "2"),
    ("cluster.k_max", "8"),
    ("cluster.compare", "false"),
    ("bench.sample_sizes", "240,4000"),
    ("bench.feature_counts", "4,50"),
    ("bench.runs", "3"),
    ("bench.rows", "25"),
    ("bench.cols", "15"),
    ("bench.topology", "rect"),
    ("bench.test_fraction", "0.2"),
    ("bench.large", "false"),
    ("render.cell_size", "24"),
    ("render.show_colorbar", "true"),
    ("render.absent_fill", "#d9d9d9"),
];

/// Flat dotted-key configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            values: KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.into();
                Ok(())
            }
            None => Err(SomError::Config(format!("unknown config key '{key}'"))),
        }
    }

    /// Applies `key = value` lines. Blank lines and lines starting with `#`
    /// are skipped.
    pub fn merge_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| SomError::Config(format!("{origin}:{}: expected 'key = value'", n + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| SomError::Config(format!("{origin}:{}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).expect("known key")
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        let raw = self.raw(key);
        raw.parse()
            .map_err(|e| SomError::Config(format!("{key} = '{raw}': {e}")))
    }

    fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.get(key).map(Some)
        }
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: Display,
    {
        self.raw(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|e| SomError::Config(format!("{key}: '{s}': {e}"))))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# effective somkit configuration\n");
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        Ok(TrainConfig {
            epochs: self.get("train.epochs")?,
            lr0: self.get("train.lr0")?,
            sigma0: self.get("train.sigma0")?,
            lr_schedule: self.get::<ScheduleKind>("train.lr_schedule")?,
            sigma_schedule: self.get::<ScheduleKind>("train.sigma_schedule")?,
            update_mode: self.get::<UpdateMode>("train.update_mode")?,
            seed: self.get("run.seed")?,
            d_th: self.get("train.d_th")?,
            gamma: self.opt("train.gamma")?,
        })
    }

    pub fn blob_spec(&self) -> Result<BlobSpec> {
        Ok(BlobSpec {
            n_samples: self.get("blobs.n_samples")?,
            n_features: self.get("blobs.n_features")?,
            n_centers: self.get("blobs.n_centers")?,
            cluster_std: self.get("blobs.cluster_std")?,
            center_box: (self.get("blobs.center_min")?, self.get("blobs.center_max")?),
            seed: self.get("run.seed")?,
        })
    }

    pub fn bench_plan(&self) -> Result<BenchPlan> {
        let spec = self.blob_spec()?;
        Ok(BenchPlan {
            sample_sizes: self.list("bench.sample_sizes")?,
            feature_counts: self.list("bench.feature_counts")?,
            rows: self.get("bench.rows")?,
            cols: self.get("bench.cols")?,
            topology: self.get::<TopologyKind>("bench.topology")?,
            runs: self.get("bench.runs")?,
            seed0: self.get("run.seed")?,
            test_fraction: self.get("bench.test_fraction")?,
            n_centers: spec.n_centers,
            cluster_std: spec.cluster_std,
            center_box: spec.center_box,
            train: self.train_config()?,
            large: self.get("bench.large")?,
        })
    }

    pub fn style(&self, title: &str) -> Result<RenderStyle> {
        Ok(RenderStyle {
            cell_size: self.get("render.cell_size")?,
            show_colorbar: self.get("render.show_colorbar")?,
            absent_fill: self.raw("render.absent_fill").to_string(),
            title: title.to_string(),
            ..RenderStyle::default()
        })
    }

    fn cluster_space(&self) -> Result<ClusterSpace> {
        let mut space: ClusterSpace = self.get("cluster.space")?;
        if space.kind == SpaceKind::Combined {
            space = ClusterSpace::combined(self.get("cluster.position_weight")?)?;
        }
        Ok(space)
    }
}

#[derive(Debug, Parser)]
#[command(name = "somkit", version, about = "Self-organizing map training, analysis and benchmarking")]
pub struct Cli {
    /// Seed for data generation, initialization and shuffling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: runs/<unix time>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (falls back to SOMKIT_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(short, long, global = true)]
    quiet: bool,
    /// Extra config override, repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a map and write the model, learning curves and their chart.
    Train(TrainArgs),
    /// Build per-neuron maps from a model and a dataset.
    Map(MapArgs),
    /// Cluster the neurons of a model.
    Cluster(ClusterArgs),
    /// Gather samples around a query's best-matching unit.
    Collect(CollectArgs),
    /// Run the benchmark plan.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// CSV file with a header row; omit to generate blobs.
    #[arg(long)]
    data: Option<String>,
    /// Column holding a regression target.
    #[arg(long)]
    target: Option<String>,
    /// Column holding integer class labels.
    #[arg(long)]
    label: Option<String>,
    /// Z-score features using statistics of the given dataset.
    #[arg(long)]
    standardize: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    /// rect or hex
    #[arg(long)]
    topology: Option<String>,
    /// pca or random
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// online or batch
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    metric: Option<String>,
}

#[derive(Debug, Args)]
struct MapArgs {
    #[arg(long)]
    model: Option<String>,
    #[command(flatten)]
    data: DataArgs,
    /// Comma list of umatrix, hit, component:<j>, metric:mean, metric:std,
    /// score, rank, classification, cluster.
    #[arg(long)]
    types: Option<String>,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    #[arg(long)]
    model: Option<String>,
    /// weights, positions or combined
    #[arg(long)]
    space: Option<String>,
    /// kmeans or gmm
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    /// Choose k by the elbow rule over --k-min..=--k-max.
    #[arg(long)]
    elbow: bool,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    /// Also score every space and algorithm combination.
    #[arg(long)]
    compare: bool,
}

#[derive(Debug, Args)]
struct CollectArgs {
    #[arg(long)]
    model: Option<String>,
    #[command(flatten)]
    data: DataArgs,
    /// Inline query vector, comma separated.
    #[arg(long, conflicts_with = "query_row")]
    query: Option<String>,
    /// Use this dataset row (0-based) as the query.
    #[arg(long)]
    query_row: Option<usize>,
    #[arg(long)]
    min_samples: Option<usize>,
    #[arg(long)]
    max_order: Option<usize>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Comma list of sample sizes.
    #[arg(long)]
    samples: Option<String>,
    /// Comma list of feature counts.
    #[arg(long)]
    features: Option<String>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    topology: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    mode: Option<String>,
    /// Allow cells above the size gate (16000x300, 90x70 maps).
    #[arg(long)]
    large: bool,
}

fn push<T: ToString>(out: &mut Vec<(&'static str, String)>, key: &'static str, v: &Option<T>) {
    if let Some(v) = v {
        out.push((key, v.to_string()));
    }
}

impl DataArgs {
    fn overrides(&self, out: &mut Vec<(&'static str, String)>) {
        push(out, "data.path", &self.data);
        push(out, "data.target", &self.target);
        push(out, "data.label", &self.label);
        if self.standardize {
            out.push(("data.standardize", "true".into()));
        }
    }
}

impl Command {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut o = Vec::new();
        match self {
            Command::Train(a) => {
                a.data.overrides(&mut o);
                push(&mut o, "map.rows", &a.rows);
                push(&mut o, "map.cols", &a.cols);
                push(&mut o, "map.topology", &a.topology);
                push(&mut o, "map.init", &a.init);
                push(&mut o, "train.epochs", &a.epochs);
                push(&mut o, "train.lr0", &a.lr);
                push(&mut o, "train.sigma0", &a.sigma);
                push(&mut o, "train.update_mode", &a.mode);
                push(&mut o, "train.kernel", &a.kernel);
                push(&mut o, "train.metric", &a.metric);
            }
            Command::Map(a) => {
                push(&mut o, "model.path", &a.model);
                a.data.overrides(&mut o);
                push(&mut o, "analysis.types", &a.types);
            }
            Command::Cluster(a) => {
                push(&mut o, "model.path", &a.model);
                push(&mut o, "cluster.space", &a.space);
                push(&mut o, "cluster.algorithm", &a.algorithm);
                push(&mut o, "cluster.k", &a.k);
                push(&mut o, "cluster.k_min", &a.k_min);
                push(&mut o, "cluster.k_max", &a.k_max);
                if a.elbow {
                    o.push(("cluster.elbow", "true".into()));
                }
                if a.compare {
                    o.push(("cluster.compare", "true".into()));
                }
            }
            Command::Collect(a) => {
                push(&mut o, "model.path", &a.model);
                a.data.overrides(&mut o);
                push(&mut o, "collect.query", &a.query);
                push(&mut o, "collect.query_row", &a.query_row);
                push(&mut o, "collect.min_samples", &a.min_samples);
                push(&mut o, "collect.max_order", &a.max_order);
            }
            Command::Bench(a) => {
                push(&mut o, "bench.sample_sizes", &a.samples);
                push(&mut o, "bench.feature_counts", &a.features);
                push(&mut o, "bench.runs", &a.runs);
                push(&mut o, "bench.rows", &a.rows);
                push(&mut o, "bench.cols", &a.cols);
                push(&mut o, "bench.topology", &a.topology);
                push(&mut o, "train.epochs", &a.epochs);
                push(&mut o, "train.update_mode", &a.mode);
                if a.large {
                    o.push(("bench.large", "true".into()));
                }
            }
        }
        o
    }
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    quiet: bool,
}

impl Ctx {
    fn id(&self) -> &str {
        self.cfg.raw("run.id")
    }

    fn path(&self, suffix: &str) -> PathBuf {
        self.out.join(format!("{}{suffix}", self.id()))
    }

    fn write(&self, suffix: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let p = self.path(suffix);
        fs::write(&p, contents)?;
        Ok(p)
    }

    fn say(&self, msg: impl Display) {
        if !self.quiet {
            println!("{msg}");
        }
    }

    /// Dataset from `data.path`, or generated blobs when unset.
    fn dataset(&self) -> Result<Dataset> {
        let path = self.cfg.raw("data.path");
        let data = if path.is_empty() {
            data::make_blobs(&self.cfg.blob_spec()?)?
        } else {
            let opts = CsvOptions {
                target: self.cfg.opt("data.target")?,
                label: self.cfg.opt("data.label")?,
            };
            data::load_csv(path, &opts)?
        };
        if self.cfg.get("data.standardize")? {
            let scaler = Scaler::fit(&data)?;
            return scaler.transform(&data);
        }
        Ok(data)
    }

    fn model(&self) -> Result<SomModel> {
        let path = self.cfg.raw("model.path");
        if path.is_empty() {
            return Err(SomError::Input("no model given; pass --model".into()));
        }
        som::load(path).map_err(|e| match e {
            SomError::Io(io) => SomError::Input(format!("cannot read model {path}: {io}")),
            other => other,
        })
    }
}

fn train(ctx: &Ctx) -> Result<()> {
    let cfg = &ctx.cfg;
    let train_cfg = cfg.train_config()?;
    train_cfg.validate()?;
    let data = ctx.dataset()?;
    let topo = GridTopology::new(cfg.get("map.topology")?, cfg.get("map.rows")?, cfg.get("map.cols")?)?;
    let mut model = match cfg.raw("map.init") {
        "pca" => {
            let init = SomModel::init_pca(topo, data.dim(), &data)?;
            if init.fell_back {
                ctx.say("note: data has no principal spread, used random initialization");
            }
            init.model
        }
        "random" => SomModel::init_random(topo, data.dim(), &data, train_cfg.seed)?,
        other => return Err(SomError::Config(format!("map.init = '{other}': expected pca or random"))),
    };
    model = model
        .with_kernel(cfg.get::<NeighborhoodKernel>("train.kernel")?)
        .with_metric(cfg.get::<FeatureDistance>("train.metric")?);
    let report = model.fit(&data, &train_cfg)?;

    let model_path = ctx.path(".somk");
    som::save(&model, &model_path)?;
    let mut curves = String::from("epoch,qe,te\n");
    for (t, (qe, te)) in report.qe_curve.iter().zip(&report.te_curve).enumerate() {
        curves.push_str(&format!("{},{qe},{te}\n", t + 1));
    }
    ctx.write("_curves.csv", curves)?;
    let svg = render::render_learning_curves(&report.qe_curve, &report.te_curve, &cfg.style("Learning curves")?)?;
    ctx.write("_learning_curves.svg", svg)?;
    ctx.say(format!(
        "trained {}x{} {} map on {} samples: QE {:.4}, TE {:.4}",
        topo.rows(),
        topo.cols(),
        topo.kind(),
        data.len(),
        report.qe_curve.last().copied().unwrap_or(f64::NAN),
        report.te_curve.last().copied().unwrap_or(f64::NAN),
    ));
    ctx.say(format!("model written to {}", model_path.display()));
    Ok(())
}

fn need<'a, T>(v: Option<&'a [T]>, what: &str, map: &str, key: &str) -> Result<&'a [T]> {
    v.ok_or_else(|| SomError::Input(format!("{map} map needs a {what} column; set --{key} or data.{key}")))
}

fn build_layer(ctx: &Ctx, spec: &str, model: &SomModel, data: &Dataset, buf: &NeuronBuffer) -> Result<(String, MapLayer)> {
    let targets = || need(data.target(), "target", spec, "target");
    Ok(match spec {
        "umatrix" => ("umatrix".into(), analysis::u_matrix(model)),
        "hit" => ("hit".into(), analysis::hit_map(buf)),
        "metric:mean" => ("metric_mean".into(), analysis::metric_map(buf, targets()?, Stat::Mean)?),
        "metric:std" => ("metric_std".into(), analysis::metric_map(buf, targets()?, Stat::Std)?),
        "score" => ("score".into(), analysis::score_map(buf, targets()?)?),
        "rank" => {
            let mean = analysis::metric_map(buf, targets()?, Stat::Mean)?;
            ("rank".into(), analysis::rank_map(&mean))
        }
        "classification" => {
            let labels = need(data.labels(), "label", spec, "label")?;
            ("classification".into(), analysis::classification_map(buf, labels)?)
        }
        "cluster" => {
            let r = clustering::cluster(
                model,
                ctx.cfg.cluster_space()?,
                ctx.cfg.get::<Algorithm>("cluster.algorithm")?,
                ctx.cfg.get("cluster.k")?,
                ctx.cfg.get("run.seed")?,
            )?;
            ("cluster".into(), r.layer(model)?)
        }
        other => match other.strip_prefix("component:") {
            Some(j) => {
                let j: usize = j
                    .parse()
                    .map_err(|_| SomError::Input(format!("bad component index in '{other}'")))?;
                (format!("component_{j}"), analysis::component_plane(model, j)?)
            }
            None => return Err(SomError::Input(format!("unknown map type '{other}'"))),
        },
    })
}

fn map(ctx: &Ctx) -> Result<()> {
    let model = ctx.model()?;
    let data = ctx.dataset()?;
    let buf = analysis::assign(&model, &data)?;
    let types: Vec<String> = ctx.cfg.list("analysis.types")?;
    if types.is_empty() {
        return Err(SomError::Input("no map types requested".into()));
    }
    // validate every request before writing anything
    let layers: Vec<(String, MapLayer)> = types
        .iter()
        .map(|t| build_layer(ctx, t, &model, &data, &buf))
        .collect::<Result<_>>()?;
    for (name, layer) in &layers {
        let mut style = ctx.cfg.style(name)?;
        if name == "classification" || name == "cluster" {
            style = style.categorical();
        }
        ctx.write(&format!("_{name}.csv"), layer.to_csv_string())?;
        let p = ctx.write(&format!("_{name}.svg"), render::render_map(layer, &style)?)?;
        ctx.say(format!("wrote {}", p.display()));
    }
    Ok(())
}

fn cluster(ctx: &Ctx) -> Result<()> {
    let cfg = &ctx.cfg;
    let model = ctx.model()?;
    let space = cfg.cluster_space()?;
    let algorithm: Algorithm = cfg.get("cluster.algorithm")?;
    let seed: u64 = cfg.get("run.seed")?;
    let mut k: usize = cfg.get("cluster.k")?;
    if cfg.get("cluster.elbow")? {
        let features = clustering::cluster_features(&model, space)?;
        let (lo, hi): (usize, usize) = (cfg.get("cluster.k_min")?, cfg.get("cluster.k_max")?);
        if lo == 0 {
            return Err(SomError::Parameter("k_min must be >= 1".into()));
        }
        let e = clustering::elbow(&features, lo..=hi, seed)?;
        let mut csv = String::from("k,inertia\n");
        for (k, i) in e.ks.iter().zip(&e.inertias) {
            csv.push_str(&format!("{k},{i}\n"));
        }
        ctx.write("_elbow.csv", csv)?;
        let curve = Series::new("inertia", e.ks.iter().zip(&e.inertias).map(|(&k, &i)| (k as f64, i)).collect());
        let pick = e.ks.iter().position(|&k| k == e.selected).expect("selected k is in range");
        let chosen = Series::new(format!("k = {}", e.selected), vec![(e.selected as f64, e.inertias[pick])]);
        let panel = render::Panel {
            title: "Within-cluster dispersion".into(),
            x_label: "k".into(),
            series: vec![curve, chosen],
        };
        ctx.write("_elbow.svg", render::render_panels(&[panel], &cfg.style("Elbow")?)?)?;
        ctx.say(format!("elbow selected k = {}", e.selected));
        k = e.selected;
    }
    if k == 0 {
        return Err(SomError::Parameter("k must be >= 1".into()));
    }
    let result = clustering::cluster(&model, space, algorithm, k, seed)?;
    let topo = model.topology();
    let mut csv = String::from("row,col,cluster\n");
    for (c, id) in topo.coords().zip(&result.assignment) {
        csv.push_str(&format!("{},{},{id}\n", c.row, c.col));
    }
    ctx.write("_clusters.csv", csv)?;
    let layer = result.layer(&model)?;
    ctx.write("_cluster.svg", render::render_map(&layer, &cfg.style("Clusters")?.categorical())?)?;

    let features = clustering::cluster_features(&model, space)?;
    let quality = if result.k >= 2 {
        Some(clustering::quality_metrics(&features, &result.assignment)?)
    } else {
        None
    };
    let mut rows = Vec::new();
    if let Some(q) = quality {
        rows.push(clustering::CompareRow {
            space,
            algorithm,
            k: result.k,
            quality: q,
            objective: result.objective,
        });
    }
    let mut metrics = Vec::new();
    clustering::write_compare_csv(&rows, &mut metrics)?;
    ctx.write("_cluster_metrics.csv", metrics)?;
    match quality {
        Some(q) => ctx.say(format!(
            "{algorithm} in {space} space, k = {}: silhouette {:.3}, Davies-Bouldin {:.3}, Calinski-Harabasz {:.1}",
            result.k, q.silhouette, q.davies_bouldin, q.calinski_harabasz
        )),
        None => ctx.say(format!("{algorithm} in {space} space, k = {}", result.k)),
    }

    if cfg.get("cluster.compare")? {
        let spaces = [ClusterSpace::WEIGHTS, ClusterSpace::POSITIONS, ClusterSpace::combined(cfg.get("cluster.position_weight")?)?];
        let table = clustering::compare(&model, &spaces, &Algorithm::ALL, k, seed)?;
        let mut out = Vec::new();
        clustering::write_compare_csv(&table, &mut out)?;
        ctx.write("_compare.csv", out)?;
        ctx.write("_compare.svg", render::render_bars(&table, &cfg.style("Clustering comparison")?)?)?;
    }
    Ok(())
}

fn collect(ctx: &Ctx) -> Result<()> {
    let cfg = &ctx.cfg;
    let model = ctx.model()?;
    let data = ctx.dataset()?;
    let query: Vec<f64> = match (cfg.opt::<usize>("collect.query_row")?, cfg.raw("collect.query")) {
        (Some(_), q) if !q.is_empty() => {
            return Err(SomError::Input("give either --query or --query-row, not both".into()))
        }
        (Some(r), _) => {
            if r >= data.len() {
                return Err(SomError::IndexOutOfRange {
                    index: r,
                    limit: data.len(),
                });
            }
            data.row(r).to_vec()
        }
        (None, "") => return Err(SomError::Input("no query given; pass --query or --query-row".into())),
        (None, _) => cfg.list("collect.query")?,
    };
    let buf = analysis::assign(&model, &data)?;
    let got = analysis::collect_sample(
        &model,
        &buf,
        &data,
        &query,
        cfg.get("collect.min_samples")?,
        cfg.get("collect.max_order")?,
    )?;
    let mut out = Vec::new();
    got.write_csv(&mut out)?;
    let p = ctx.write("_collect.csv", out)?;
    ctx.say(format!(
        "collected {} samples around neuron {} (ring order {}{}) -> {}",
        got.indices.len(),
        got.bmu,
        got.order,
        if got.shortfall { ", shortfall" } else { "" },
        p.display()
    ));
    Ok(())
}

fn run_bench(ctx: &Ctx) -> Result<()> {
    let plan = ctx.cfg.bench_plan()?;
    let rows = bench::run_plan_with(&plan, |row| {
        if !ctx.quiet {
            eprintln!(
                "cell {}x{}: {}",
                row.samples,
                row.features,
                match &row.failure {
                    None => format!("QE {:.3} TE {:.3}", row.qe.mean, row.te.mean),
                    Some(m) => format!("failed: {m}"),
                }
            );
        }
    })?;
    ctx.write("_bench.csv", bench::render_table(&rows, TableFormat::Csv))?;
    let text = bench::render_table(&rows, TableFormat::AlignedText);
    ctx.write("_bench.txt", &text)?;
    print!("{text}");
    Ok(())
}

fn default_out() -> PathBuf {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Path::new("runs").join(secs.to_string())
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) if !v.trim().is_empty() => Some(
                v.trim()
                    .parse()
                    .map_err(|_| SomError::Config(format!("{THREADS_ENV} = '{v}' is not a thread count")))?,
            ),
            _ => None,
        },
    };
    if n == Some(0) {
        return Err(SomError::Config("thread count must be >= 1".into()));
    }
    Ok(n)
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path)
            .map_err(|e| SomError::Config(format!("cannot read {}: {e}", path.display())))?;
        cfg.merge_text(&text, &path.display().to_string())?;
    }
    if let Some(seed) = cli.seed {
        cfg.set("run.seed", seed.to_string())?;
    }
    for (k, v) in cli.command.overrides() {
        cfg.set(k, v)?;
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| SomError::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    let out = cli.out.clone().unwrap_or_else(default_out);
    fs::create_dir_all(&out)?;
    fs::write(out.join("config.txt"), cfg.to_text())?;
    let ctx = Ctx {
        cfg,
        out,
        quiet: cli.quiet,
    };
    let work = || match &cli.command {
        Command::Train(_) => train(&ctx),
        Command::Map(_) => map(&ctx),
        Command::Cluster(_) => cluster(&ctx),
        Command::Collect(_) => collect(&ctx),
        Command::Bench(_) => run_bench(&ctx),
    };
    match thread_count(cli.threads)? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SomError::Config(format!("cannot start {n} threads: {e}")))?
            .install(work),
        None => work(),
    }
}

/// Parses arguments, runs the command and returns the process exit code:
/// 0 success, 2 usage or input error, 1 internal error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_user_error() {
                2
            } else {
                1
            }
        }
    }
}
