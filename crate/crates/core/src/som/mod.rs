//! The self-organizing map: codebook, best-matching-unit search, quality
//! measures and training.

mod format;
mod init;
mod train;

use rayon::prelude::*;

pub use format::{load, read_model, save, write_model, FORMAT_VERSION, MAGIC};
pub use init::PcaInit;
pub use train::{FitReport, TrainConfig, UpdateMode};

use crate::data::Dataset;
use crate::error::{Result, SomError};
use crate::grid::{GridTopology, NeuronCoord, PlanarPosition};
use crate::kernels::{FeatureDistance, NeighborhoodKernel};

/// Rows per rayon task when scanning samples.
const SAMPLE_CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct SomModel {
    topo: GridTopology,
    dim: usize,
    /// `topo.len() x dim`, row-major neuron order.
    weights: Vec<f64>,
    metric: FeatureDistance,
    kernel: NeighborhoodKernel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmuResult {
    pub coord: NeuronCoord,
    pub distance: f64,
    pub second: NeuronCoord,
}

/// Flat-index form of a BMU search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct BmuPair {
    pub best: usize,
    pub best_dist: f64,
    pub second: usize,
}

impl SomModel {
    /// Wraps an explicit codebook. Defaults to Euclidean distance and a
    /// Gaussian kernel.
    pub fn new(topo: GridTopology, dim: usize, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(SomError::Parameter("weight dimension must be >= 1".into()));
        }
        if weights.len() != topo.len() * dim {
            return Err(SomError::Shape {
                expected: topo.len() * dim,
                actual: weights.len(),
            });
        }
        if let Some(pos) = weights.iter().position(|w| !w.is_finite()) {
            return Err(SomError::Input(format!(
                "non-finite weight at neuron {}, feature {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self {
            topo,
            dim,
            weights,
            metric: FeatureDistance::Euclidean,
            kernel: NeighborhoodKernel::Gaussian,
        })
    }

    pub fn with_metric(mut self, metric: FeatureDistance) -> Self {
        self.metric = metric;
        self
    }

    pub fn with_kernel(mut self, kernel: NeighborhoodKernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn topology(&self) -> &GridTopology {
        &self.topo
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> FeatureDistance {
        self.metric
    }

    pub fn kernel(&self) -> NeighborhoodKernel {
        self.kernel
    }

    pub fn n_neurons(&self) -> usize {
        self.topo.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, c: NeuronCoord) -> Result<&[f64]> {
        let i = self.topo.index(c)?;
        Ok(self.neuron(i))
    }

    #[inline]
    pub(crate) fn neuron(&self, i: usize) -> &[f64] {
        &self.weights[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn positions(&self) -> Vec<PlanarPosition> {
        self.topo.coords().map(|c| self.topo.planar_unchecked(c)).collect()
    }

    fn check_vector(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(SomError::Shape {
                expected: self.dim,
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SomError::Input("query vector has non-finite values".into()));
        }
        if self.metric == FeatureDistance::Cosine && x.iter().all(|&v| v == 0.0) {
            return Err(SomError::Domain("cosine distance is undefined for a zero vector".into()));
        }
        Ok(())
    }

    pub(crate) fn check_data(&self, data: &Dataset) -> Result<()> {
        if data.dim() != self.dim {
            return Err(SomError::Shape {
                expected: self.dim,
                actual: data.dim(),
            });
        }
        if self.metric == FeatureDistance::Cosine {
            if let Some(i) = data.rows().position(|r| r.iter().all(|&v| v == 0.0)) {
                return Err(SomError::Domain(format!(
                    "row {i} is a zero vector; cosine distance is undefined"
                )));
            }
        }
        Ok(())
    }

    fn require_pair(&self) -> Result<()> {
        if self.n_neurons() < 2 {
            return Err(SomError::Config(
                "second best-matching unit needs a grid with at least two neurons".into(),
            ));
        }
        Ok(())
    }

    /// Nearest and second-nearest neurons; ties go to the lowest flat index.
    #[inline]
    pub(crate) fn bmu_pair(&self, x: &[f64]) -> BmuPair {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        // The first iteration parks `second` on neuron 0 at infinite distance;
        // any later neuron replaces it. Meaningless on a one-neuron grid.
        let mut second = 0;
        let mut second_dist = f64::INFINITY;
        for (i, w) in self.weights.chunks_exact(self.dim).enumerate() {
            let d = self.metric.distance_unchecked(x, w);
            if d < best_dist {
                second = best;
                second_dist = best_dist;
                best = i;
                best_dist = d;
            } else if d < second_dist {
                second = i;
                second_dist = d;
            }
        }
        BmuPair {
            best,
            best_dist,
            second,
        }
    }

    #[inline]
    pub(crate) fn bmu_index(&self, x: &[f64]) -> (usize, f64) {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, w) in self.weights.chunks_exact(self.dim).enumerate() {
            let d = self.metric.distance_unchecked(x, w);
            if d < best_dist {
                best = i;
                best_dist = d;
            }
        }
        (best, best_dist)
    }

    pub fn find_bmu(&self, x: &[f64]) -> Result<BmuResult> {
        self.check_vector(x)?;
        self.require_pair()?;
        let p = self.bmu_pair(x);
        Ok(BmuResult {
            coord: self.topo.coord_unchecked(p.best),
            distance: p.best_dist,
            second: self.topo.coord_unchecked(p.second),
        })
    }

    /// BMU pairs for every row, in row order.
    pub(crate) fn bmu_pairs(&self, data: &Dataset) -> Vec<BmuPair> {
        data.features()
            .par_chunks(self.dim * SAMPLE_CHUNK)
            .flat_map_iter(|block| block.chunks_exact(self.dim).map(|x| self.bmu_pair(x)))
            .collect()
    }

    pub(crate) fn bmu_indices(&self, data: &Dataset) -> Vec<(usize, f64)> {
        data.features()
            .par_chunks(self.dim * SAMPLE_CHUNK)
            .flat_map_iter(|block| block.chunks_exact(self.dim).map(|x| self.bmu_index(x)))
            .collect()
    }

    pub fn predict_bmus(&self, data: &Dataset) -> Result<Vec<NeuronCoord>> {
        self.check_data(data)?;
        Ok(self
            .bmu_indices(data)
            .into_iter()
            .map(|(i, _)| self.topo.coord_unchecked(i))
            .collect())
    }

    /// Mean distance from each sample to its BMU under the model's metric.
    pub fn quantization_error(&self, data: &Dataset) -> Result<f64> {
        self.check_data(data)?;
        if data.is_empty() {
            return Err(SomError::Input("quantization error of an empty dataset".into()));
        }
        let dists = self.bmu_indices(data);
        Ok(dists.iter().map(|&(_, d)| d).sum::<f64>() / data.len() as f64)
    }

    /// Fraction of samples whose BMU and second BMU are more than `d_th`
    /// rings apart.
    pub fn topographic_error(&self, data: &Dataset, d_th: f64) -> Result<f64> {
        self.check_data(data)?;
        self.require_pair()?;
        if data.is_empty() {
            return Err(SomError::Input("topographic error of an empty dataset".into()));
        }
        Ok(self.te_from_pairs(&self.bmu_pairs(data), d_th))
    }

    pub(crate) fn te_from_pairs(&self, pairs: &[BmuPair], d_th: f64) -> f64 {
        let errors = pairs
            .iter()
            .filter(|p| {
                let a = self.topo.coord_unchecked(p.best);
                let b = self.topo.coord_unchecked(p.second);
                self.topo.ring_distance_unchecked(a, b) as f64 > d_th
            })
            .count();
        errors as f64 / pairs.len() as f64
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    pub(crate) fn random_model(rows: usize, cols: usize, dim: usize, seed: u64) -> SomModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let topo = GridTopology::rectangular(rows, cols).unwrap();
        let w = (0..rows * cols * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        SomModel::new(topo, dim, w).unwrap()
    }

    fn random_data(n: usize, dim: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Dataset::new((0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect(), dim).unwrap()
    }

    /// Exhaustive scan written independently of `bmu_pair`.
    fn naive_pair(model: &SomModel, x: &[f64]) -> (usize, usize, f64) {
        let n = model.n_neurons();
        let d: Vec<f64> = (0..n)
            .map(|i| model.metric().distance(x, model.neuron(i)).unwrap())
            .collect();
        let best = (0..n).fold(0, |b, i| if d[i] < d[b] { i } else { b });
        let second = (0..n)
            .filter(|&i| i != best)
            .fold(None, |b: Option<usize>, i| match b {
                Some(b) if d[b] <= d[i] => Some(b),
                _ => Some(i),
            })
            .unwrap();
        (best, second, d[best])
    }

    #[test]
    fn bmu_exact_match() {
        let model = random_model(4, 3, 5, 1);
        let x = model.neuron(7).to_vec();
        let r = model.find_bmu(&x).unwrap();
        assert_eq!(r.coord, NeuronCoord::new(2, 1));
        assert_eq!(r.distance, 0.0);
        assert_ne!(r.second, r.coord);
    }

    #[test]
    fn bmu_ties_go_to_lowest_index() {
        let topo = GridTopology::rectangular(3, 3).unwrap();
        let model = SomModel::new(topo, 2, vec![0.5; 18]).unwrap();
        let r = model.find_bmu(&[0.0, 0.0]).unwrap();
        assert_eq!(r.coord, NeuronCoord::new(0, 0));
        assert_eq!(r.second, NeuronCoord::new(0, 1));
    }

    #[test]
    fn bmu_second_when_first_neuron_is_far() {
        let topo = GridTopology::rectangular(1, 3).unwrap();
        let model = SomModel::new(topo, 1, vec![10.0, 0.0, 1.0]).unwrap();
        let r = model.find_bmu(&[0.0]).unwrap();
        assert_eq!((r.coord.col, r.second.col), (1, 2));
        let model = SomModel::new(topo, 1, vec![0.0, 10.0, 20.0]).unwrap();
        let r = model.find_bmu(&[0.0]).unwrap();
        assert_eq!((r.coord.col, r.second.col), (0, 1));
    }

    #[test]
    fn bmu_errors() {
        let model = random_model(2, 2, 3, 0);
        assert!(matches!(model.find_bmu(&[0.0; 2]), Err(SomError::Shape { .. })));
        let single = random_model(1, 1, 3, 0);
        assert!(matches!(single.find_bmu(&[0.0; 3]), Err(SomError::Config(_))));
        let cos = random_model(2, 2, 3, 0).with_metric(FeatureDistance::Cosine);
        assert!(matches!(cos.find_bmu(&[0.0; 3]), Err(SomError::Domain(_))));
    }

    #[test]
    fn bmu_matches_exhaustive_scan() {
        for metric in FeatureDistance::ALL {
            let model = random_model(5, 5, 3, 11).with_metric(metric);
            let data = random_data(20, 3, 12);
            for x in data.rows() {
                let r = model.find_bmu(x).unwrap();
                let (best, second, d) = naive_pair(&model, x);
                assert_eq!(model.topology().index(r.coord).unwrap(), best);
                assert_eq!(model.topology().index(r.second).unwrap(), second);
                assert_eq!(r.distance, d);
            }
        }
    }

    #[test]
    fn quantization_error_cases() {
        let model = random_model(3, 3, 2, 4);
        let codebook = Dataset::new(model.weights().to_vec(), 2).unwrap();
        assert_eq!(model.quantization_error(&codebook).unwrap(), 0.0);

        let one = Dataset::new(vec![3.0, -2.0], 2).unwrap();
        let (best, _, _) = naive_pair(&model, one.row(0));
        let w = model.neuron(best);
        let expected = ((3.0 - w[0]).powi(2) + (-2.0 - w[1]).powi(2)).sqrt();
        assert_eq!(model.quantization_error(&one).unwrap(), expected);

        let data = random_data(40, 2, 5);
        let naive: f64 = data.rows().map(|x| naive_pair(&model, x).2).sum::<f64>() / 40.0;
        assert!((model.quantization_error(&data).unwrap() - naive).abs() < 1e-12);

        let empty = Dataset::new(vec![], 2).unwrap();
        assert!(model.quantization_error(&empty).is_err());
    }

    #[test]
    fn topographic_error_cases() {
        let pair = random_model(1, 2, 3, 1);
        assert_eq!(pair.topographic_error(&random_data(30, 3, 2), 1.0).unwrap(), 0.0);

        // Neurons 0 and 3 coincide with the data; 1 and 2 are far away.
        let topo = GridTopology::rectangular(1, 4).unwrap();
        let model = SomModel::new(topo, 1, vec![0.0, 100.0, 100.0, 0.1]).unwrap();
        let data = Dataset::new(vec![0.0, 0.01, 0.02], 1).unwrap();
        assert_eq!(model.topographic_error(&data, 1.0).unwrap(), 1.0);

        let single = random_model(1, 1, 3, 0);
        assert!(single.topographic_error(&random_data(3, 3, 0), 1.0).is_err());
    }

    #[test]
    fn topographic_error_matches_naive() {
        for seed in 0..10 {
            let model = random_model(4, 5, 3, seed);
            let data = random_data(25, 3, seed + 100);
            let naive = data
                .rows()
                .filter(|x| {
                    let (b, s, _) = naive_pair(&model, x);
                    let topo = model.topology();
                    let (cb, cs) = (topo.coord(b).unwrap(), topo.coord(s).unwrap());
                    cb.row.abs_diff(cs.row).max(cb.col.abs_diff(cs.col)) > 1
                })
                .count() as f64
                / 25.0;
            assert_eq!(model.topographic_error(&data, 1.0).unwrap(), naive);
        }
    }

    #[test]
    fn predict_bmus_cases() {
        let model = random_model(3, 4, 2, 9);
        let codebook = Dataset::new(model.weights().to_vec(), 2).unwrap();
        let coords = model.predict_bmus(&codebook).unwrap();
        assert_eq!(coords, model.topology().coords().collect::<Vec<_>>());

        let data = random_data(30, 2, 3);
        let perm: Vec<usize> = (0..30).rev().collect();
        let a = model.predict_bmus(&data).unwrap();
        let b = model.predict_bmus(&data.select(&perm)).unwrap();
        assert_eq!(perm.iter().map(|&i| a[i]).collect::<Vec<_>>(), b);
        for (x, c) in data.rows().zip(&a) {
            assert_eq!(model.find_bmu(x).unwrap().coord, *c);
        }
        assert!(model.predict_bmus(&random_data(3, 5, 0)).is_err());
    }
}
