//! Python bindings. Arrays cross the boundary as nested lists (any sequence
//! of float sequences is accepted, numpy arrays included).

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use somkit::analysis::{self, MapLayer, Stat};
use somkit::clustering::{self, Algorithm, ClusterSpace};
use somkit::data::{self, BlobSpec, CsvOptions};
use somkit::render::{self, RenderStyle};
use somkit::{
    Dataset, FeatureDistance, GridTopology, NeighborhoodKernel, ScheduleKind, SomError, SomModel, TopologyKind,
    TrainConfig, UpdateMode,
};

fn py_err(e: SomError) -> PyErr {
    match e {
        SomError::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for somkit::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn parse<T: std::str::FromStr<Err = SomError>>(s: &str) -> PyResult<T> {
    s.parse().py()
}

fn dataset(rows: Vec<Vec<f64>>) -> PyResult<Dataset> {
    Dataset::from_rows(&rows).py()
}

fn rows_of(data: &Dataset) -> Vec<Vec<f64>> {
    data.rows().map(<[f64]>::to_vec).collect()
}

/// Per-neuron values on a grid; `None` marks cells without data.
#[pyclass(name = "MapLayer", module = "somkit")]
pub struct PyMapLayer {
    inner: MapLayer,
}

#[pymethods]
impl PyMapLayer {
    #[getter]
    fn label(&self) -> String {
        self.inner.label().to_string()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        let t = self.inner.topology();
        (t.rows(), t.cols())
    }

    /// Row-major nested list.
    fn values(&self) -> Vec<Vec<Option<f64>>> {
        let cols = self.inner.topology().cols();
        self.inner.values().chunks(cols).map(<[Option<f64>]>::to_vec).collect()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv_string()
    }

    #[pyo3(signature = (title = "", categorical = false, cell_size = 24.0))]
    fn to_svg(&self, title: &str, categorical: bool, cell_size: f64) -> PyResult<String> {
        let mut style = RenderStyle::titled(title);
        style.cell_size = cell_size;
        if categorical {
            style = style.categorical();
        }
        render::render_map(&self.inner, &style).py()
    }

    fn __repr__(&self) -> String {
        let (r, c) = self.shape();
        format!("MapLayer('{}', {r}x{c})", self.inner.label())
    }
}

fn layer(inner: MapLayer) -> PyMapLayer {
    PyMapLayer { inner }
}

/// Self-organizing map.
#[pyclass(name = "Som", module = "somkit")]
pub struct PySom {
    inner: SomModel,
}

#[pymethods]
impl PySom {
    /// Map with explicit row-major weights, one row per neuron.
    #[new]
    #[pyo3(signature = (rows, cols, weights, topology = "rect", metric = "euclidean", kernel = "gaussian"))]
    fn new(rows: usize, cols: usize, weights: Vec<Vec<f64>>, topology: &str, metric: &str, kernel: &str) -> PyResult<Self> {
        let topo = GridTopology::new(parse(topology)?, rows, cols).py()?;
        let dim = weights.first().map_or(0, Vec::len);
        let flat: Vec<f64> = weights.into_iter().flatten().collect();
        let inner = SomModel::new(topo, dim, flat)
            .py()?
            .with_metric(parse(metric)?)
            .with_kernel(parse(kernel)?);
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (data, rows, cols, topology = "rect"))]
    fn init_pca(data: Vec<Vec<f64>>, rows: usize, cols: usize, topology: &str) -> PyResult<Self> {
        let data = dataset(data)?;
        let topo = GridTopology::new(parse(topology)?, rows, cols).py()?;
        let init = SomModel::init_pca(topo, data.dim(), &data).py()?;
        Ok(Self { inner: init.model })
    }

    #[staticmethod]
    #[pyo3(signature = (data, rows, cols, topology = "rect", seed = 0))]
    fn init_random(data: Vec<Vec<f64>>, rows: usize, cols: usize, topology: &str, seed: u64) -> PyResult<Self> {
        let data = dataset(data)?;
        let topo = GridTopology::new(parse(topology)?, rows, cols).py()?;
        Ok(Self {
            inner: SomModel::init_random(topo, data.dim(), &data, seed).py()?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: somkit::som::load(path).py()?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        somkit::som::save(&self.inner, path).py()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        let t = self.inner.topology();
        (t.rows(), t.cols())
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn topology(&self) -> String {
        match self.inner.topology().kind() {
            TopologyKind::Rectangular => "rect".into(),
            TopologyKind::Hexagonal => "hex".into(),
        }
    }

    #[getter]
    fn metric(&self) -> String {
        self.inner.metric().to_string()
    }

    #[getter]
    fn kernel(&self) -> String {
        self.inner.kernel().to_string()
    }

    fn set_metric(&mut self, metric: &str) -> PyResult<()> {
        let m: FeatureDistance = parse(metric)?;
        self.inner = self.inner.clone().with_metric(m);
        Ok(())
    }

    fn set_kernel(&mut self, kernel: &str) -> PyResult<()> {
        let k: NeighborhoodKernel = parse(kernel)?;
        self.inner = self.inner.clone().with_kernel(k);
        Ok(())
    }

    /// One weight vector per neuron, row-major.
    fn weights(&self) -> Vec<Vec<f64>> {
        self.inner.weights().chunks(self.inner.dim()).map(<[f64]>::to_vec).collect()
    }

    /// Trains in place and returns the per-epoch QE and TE curves.
    #[pyo3(signature = (
        data, epochs = 100, lr0 = 0.5, sigma0 = 4.0, lr_schedule = "linear",
        sigma_schedule = "inverse", mode = "batch", seed = 0, d_th = 1.0, gamma = None
    ))]
    #[allow(clippy::too_many_arguments)]
    fn fit(
        &mut self,
        py: Python<'_>,
        data: Vec<Vec<f64>>,
        epochs: usize,
        lr0: f64,
        sigma0: f64,
        lr_schedule: &str,
        sigma_schedule: &str,
        mode: &str,
        seed: u64,
        d_th: f64,
        gamma: Option<f64>,
    ) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let data = dataset(data)?;
        let cfg = TrainConfig {
            epochs,
            lr0,
            sigma0,
            lr_schedule: parse::<ScheduleKind>(lr_schedule)?,
            sigma_schedule: parse::<ScheduleKind>(sigma_schedule)?,
            update_mode: parse::<UpdateMode>(mode)?,
            seed,
            d_th,
            gamma,
        };
        let model = &mut self.inner;
        let report = py.detach(|| model.fit(&data, &cfg)).py()?;
        Ok((report.qe_curve, report.te_curve))
    }

    /// `((row, col), distance, (row2, col2))` for the best and second best unit.
    fn find_bmu(&self, x: Vec<f64>) -> PyResult<((usize, usize), f64, (usize, usize))> {
        let b = self.inner.find_bmu(&x).py()?;
        Ok(((b.coord.row, b.coord.col), b.distance, (b.second.row, b.second.col)))
    }

    fn predict_bmus(&self, data: Vec<Vec<f64>>) -> PyResult<Vec<(usize, usize)>> {
        let data = dataset(data)?;
        Ok(self.inner.predict_bmus(&data).py()?.into_iter().map(|c| (c.row, c.col)).collect())
    }

    fn quantization_error(&self, data: Vec<Vec<f64>>) -> PyResult<f64> {
        self.inner.quantization_error(&dataset(data)?).py()
    }

    #[pyo3(signature = (data, d_th = 1.0))]
    fn topographic_error(&self, data: Vec<Vec<f64>>, d_th: f64) -> PyResult<f64> {
        self.inner.topographic_error(&dataset(data)?, d_th).py()
    }

    fn u_matrix(&self) -> PyMapLayer {
        layer(analysis::u_matrix(&self.inner))
    }

    fn component_plane(&self, feature: usize) -> PyResult<PyMapLayer> {
        Ok(layer(analysis::component_plane(&self.inner, feature).py()?))
    }

    fn hit_map(&self, data: Vec<Vec<f64>>) -> PyResult<PyMapLayer> {
        let buf = analysis::assign(&self.inner, &dataset(data)?).py()?;
        Ok(layer(analysis::hit_map(&buf)))
    }

    /// `stat` is "mean" or "std".
    #[pyo3(signature = (data, targets, stat = "mean"))]
    fn metric_map(&self, data: Vec<Vec<f64>>, targets: Vec<f64>, stat: &str) -> PyResult<PyMapLayer> {
        let stat = match stat {
            "mean" => Stat::Mean,
            "std" => Stat::Std,
            other => return Err(PyValueError::new_err(format!("unknown statistic '{other}'"))),
        };
        let buf = analysis::assign(&self.inner, &dataset(data)?).py()?;
        Ok(layer(analysis::metric_map(&buf, &targets, stat).py()?))
    }

    fn score_map(&self, data: Vec<Vec<f64>>, targets: Vec<f64>) -> PyResult<PyMapLayer> {
        let buf = analysis::assign(&self.inner, &dataset(data)?).py()?;
        Ok(layer(analysis::score_map(&buf, &targets).py()?))
    }

    fn rank_map(&self, data: Vec<Vec<f64>>, targets: Vec<f64>) -> PyResult<PyMapLayer> {
        let buf = analysis::assign(&self.inner, &dataset(data)?).py()?;
        let mean = analysis::metric_map(&buf, &targets, Stat::Mean).py()?;
        Ok(layer(analysis::rank_map(&mean)))
    }

    fn classification_map(&self, data: Vec<Vec<f64>>, labels: Vec<usize>) -> PyResult<PyMapLayer> {
        let buf = analysis::assign(&self.inner, &dataset(data)?).py()?;
        Ok(layer(analysis::classification_map(&buf, &labels).py()?))
    }

    /// Returns `(indices, distances, order, shortfall)`, nearest first.
    #[pyo3(signature = (data, query, min_samples = 10, max_order = analysis::DEFAULT_MAX_ORDER))]
    fn collect_sample(
        &self,
        data: Vec<Vec<f64>>,
        query: Vec<f64>,
        min_samples: usize,
        max_order: usize,
    ) -> PyResult<(Vec<usize>, Vec<f64>, usize, bool)> {
        let data = dataset(data)?;
        let buf = analysis::assign(&self.inner, &data).py()?;
        let c = analysis::collect_sample(&self.inner, &buf, &data, &query, min_samples, max_order).py()?;
        Ok((c.indices, c.distances, c.order, c.shortfall))
    }

    /// Clusters the neurons; returns a layer of cluster ids.
    #[pyo3(signature = (k, space = "weights", algorithm = "kmeans", seed = 0, position_weight = 1.0))]
    fn cluster(&self, k: usize, space: &str, algorithm: &str, seed: u64, position_weight: f64) -> PyResult<PyMapLayer> {
        let mut space: ClusterSpace = parse(space)?;
        if space.kind == clustering::SpaceKind::Combined {
            space = ClusterSpace::combined(position_weight).py()?;
        }
        let alg: Algorithm = parse(algorithm)?;
        let r = clustering::cluster(&self.inner, space, alg, k, seed).py()?;
        Ok(layer(r.layer(&self.inner).py()?))
    }

    /// Elbow scan over k on the neuron weights: `(ks, inertias, selected)`.
    #[pyo3(signature = (k_min = 2, k_max = 8, seed = 0))]
    fn elbow(&self, k_min: usize, k_max: usize, seed: u64) -> PyResult<(Vec<usize>, Vec<f64>, usize)> {
        let f = clustering::cluster_features(&self.inner, ClusterSpace::WEIGHTS).py()?;
        let e = clustering::elbow(&f, k_min..=k_max, seed).py()?;
        Ok((e.ks, e.inertias, e.selected))
    }

    fn __repr__(&self) -> String {
        let (r, c) = self.shape();
        format!("Som({r}x{c} {}, dim={})", self.topology(), self.inner.dim())
    }
}

/// Isotropic Gaussian blobs: `(rows, center ids)`.
#[pyfunction]
#[pyo3(signature = (n_samples, n_features, seed = 0, n_centers = 3, cluster_std = 1.0, center_box = (-10.0, 10.0)))]
fn make_blobs(
    n_samples: usize,
    n_features: usize,
    seed: u64,
    n_centers: usize,
    cluster_std: f64,
    center_box: (f64, f64),
) -> PyResult<(Vec<Vec<f64>>, Vec<usize>)> {
    let spec = BlobSpec {
        n_centers,
        cluster_std,
        center_box,
        ..BlobSpec::new(n_samples, n_features, seed)
    };
    let d = data::make_blobs(&spec).py()?;
    Ok((rows_of(&d), d.labels().map(<[usize]>::to_vec).unwrap_or_default()))
}

/// Reads a CSV: `(rows, feature names, target or None, labels or None)`.
#[pyfunction]
#[pyo3(signature = (path, target = None, label = None))]
#[allow(clippy::type_complexity)]
fn load_csv(
    path: &str,
    target: Option<String>,
    label: Option<String>,
) -> PyResult<(Vec<Vec<f64>>, Vec<String>, Option<Vec<f64>>, Option<Vec<usize>>)> {
    let d = data::load_csv(path, &CsvOptions { target, label }).py()?;
    Ok((
        rows_of(&d),
        d.feature_names().to_vec(),
        d.target().map(<[f64]>::to_vec),
        d.labels().map(<[usize]>::to_vec),
    ))
}

#[pymodule]
#[pyo3(name = "somkit")]
fn somkit_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySom>()?;
    m.add_class::<PyMapLayer>()?;
    m.add_function(wrap_pyfunction!(make_blobs, m)?)?;
    m.add_function(wrap_pyfunction!(load_csv, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
