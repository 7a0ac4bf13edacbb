use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::SomModel;
use crate::data::Dataset;
use crate::error::{Result, SomError};
use crate::grid::GridTopology;
use crate::linalg::symmetric_eigen;

/// Outcome of [`SomModel::init_pca`].
#[derive(Debug, Clone)]
pub struct PcaInit {
    pub model: SomModel,
    /// The data had no variance, so the codebook was drawn with
    /// [`SomModel::init_random`] (seed 0) instead.
    pub fell_back: bool,
    /// Standard deviations along the two leading principal axes.
    pub scales: [f64; 2],
}

fn check_dims(dim: usize, data: &Dataset) -> Result<()> {
    if data.is_empty() {
        return Err(SomError::Input("cannot initialize from an empty dataset".into()));
    }
    if data.dim() != dim {
        return Err(SomError::Input(format!(
            "requested weight dimension {dim} but data has {} features",
            data.dim()
        )));
    }
    Ok(())
}

fn linspace_unit(n: usize, i: usize) -> f64 {
    if n == 1 {
        0.0
    } else {
        -1.0 + 2.0 * i as f64 / (n - 1) as f64
    }
}

impl SomModel {
    /// Every weight coordinate uniform in the per-feature `[min, max]` range
    /// of the data.
    pub fn init_random(topo: GridTopology, dim: usize, data: &Dataset, seed: u64) -> Result<Self> {
        check_dims(dim, data)?;
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for r in data.rows() {
            for j in 0..dim {
                lo[j] = lo[j].min(r[j]);
                hi[j] = hi[j].max(r[j]);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(topo.len() * dim);
        for _ in 0..topo.len() {
            for j in 0..dim {
                let u: f64 = rng.random();
                weights.push(if lo[j] == hi[j] { lo[j] } else { lo[j] + u * (hi[j] - lo[j]) });
            }
        }
        SomModel::new(topo, dim, weights)
    }

    /// Lays the codebook on the plane of the two leading principal
    /// components, centered on the data mean. Rows follow the first component
    /// and columns the second, each spanning one standard deviation either
    /// side of the mean.
    pub fn init_pca(topo: GridTopology, dim: usize, data: &Dataset) -> Result<PcaInit> {
        check_dims(dim, data)?;
        if data.len() < 2 {
            return Err(SomError::Input("PCA initialization needs at least two samples".into()));
        }
        let n = data.len();
        let mean: Vec<f64> = (0..dim)
            .map(|j| data.rows().map(|r| r[j]).sum::<f64>() / n as f64)
            .collect();
        let centered: Vec<f64> = data
            .rows()
            .flat_map(|r| r.iter().zip(&mean).map(|(v, m)| v - m))
            .collect();

        let (pcs, vars) = top_two_components(&centered, n, dim);
        let scale = mean.iter().map(|m| m * m).sum::<f64>().max(1.0);
        if !(vars[0] > 1e-24 * scale) {
            return Ok(PcaInit {
                model: SomModel::init_random(topo, dim, data, 0)?,
                fell_back: true,
                scales: [0.0, 0.0],
            });
        }
        let scales = vars.map(|v| v.max(0.0).sqrt());
        let mut weights = Vec::with_capacity(topo.len() * dim);
        for c in topo.coords() {
            let u = linspace_unit(topo.rows(), c.row) * scales[0];
            let v = linspace_unit(topo.cols(), c.col) * scales[1];
            for j in 0..dim {
                weights.push(mean[j] + u * pcs[0][j] + v * pcs[1][j]);
            }
        }
        Ok(PcaInit {
            model: SomModel::new(topo, dim, weights)?,
            fell_back: false,
            scales,
        })
    }
}

/// Two leading unit principal axes of mean-centered `n x dim` data and the
/// variances along them. Missing axes (dim 1, or rank-1 Gram) come back as
/// zero vectors with zero variance.
fn top_two_components(centered: &[f64], n: usize, dim: usize) -> ([Vec<f64>; 2], [f64; 2]) {
    let mut pcs = [vec![0.0; dim], vec![0.0; dim]];
    let mut vars = [0.0; 2];
    if dim <= n {
        // Fixed-size row blocks summed in block order: thread-count independent.
        let partials: Vec<Vec<f64>> = centered
            .par_chunks(dim * 256)
            .map(|block| {
                let mut acc = vec![0.0; dim * dim];
                for r in block.chunks_exact(dim) {
                    for i in 0..dim {
                        let ri = r[i];
                        for j in i..dim {
                            acc[i * dim + j] += ri * r[j];
                        }
                    }
                }
                acc
            })
            .collect();
        let mut cov = vec![0.0; dim * dim];
        for p in &partials {
            cov.iter_mut().zip(p).for_each(|(c, v)| *c += v);
        }
        for i in 0..dim {
            for j in i..dim {
                let v = cov[i * dim + j] / n as f64;
                cov[i * dim + j] = v;
                cov[j * dim + i] = v;
            }
        }
        let (vals, vecs) = symmetric_eigen(&cov, dim);
        for a in 0..dim.min(2) {
            pcs[a] = vecs[a].clone();
            vars[a] = vals[a].max(0.0);
        }
    } else {
        // More features than samples: diagonalize the n x n Gram matrix and
        // map its eigenvectors back through the data.
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            let ri = &centered[i * dim..(i + 1) * dim];
            for j in i..n {
                let rj = &centered[j * dim..(j + 1) * dim];
                let v = ri.iter().zip(rj).map(|(a, b)| a * b).sum::<f64>() / n as f64;
                gram[i * n + j] = v;
                gram[j * n + i] = v;
            }
        }
        let (vals, vecs) = symmetric_eigen(&gram, n);
        for a in 0..n.min(2) {
            if vals[a] <= 0.0 {
                continue;
            }
            let mut pc = vec![0.0; dim];
            for (i, r) in centered.chunks_exact(dim).enumerate() {
                for j in 0..dim {
                    pc[j] += vecs[a][i] * r[j];
                }
            }
            let norm = pc.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                pc.iter_mut().for_each(|x| *x /= norm);
                pcs[a] = pc;
                vars[a] = vals[a];
            }
        }
    }
    (pcs, vars)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    use super::*;
    use crate::grid::NeuronCoord;

    fn plane_data(n: usize, dim: usize, seed: u64) -> (Dataset, Vec<f64>, [Vec<f64>; 2]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let origin: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let mut a: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let mut b: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        a.iter_mut().for_each(|x| *x /= na);
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        b.iter_mut().zip(&a).for_each(|(y, x)| *y -= dot * x);
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        b.iter_mut().for_each(|x| *x /= nb);
        let mut feats = Vec::new();
        for _ in 0..n {
            let s: f64 = rng.random_range(-3.0..3.0);
            let t: f64 = rng.random_range(-1.0..1.0);
            feats.extend((0..dim).map(|j| origin[j] + s * a[j] + t * b[j]));
        }
        (Dataset::new(feats, dim).unwrap(), origin, [a, b])
    }

    fn plane_residual(w: &[f64], origin: &[f64], basis: &[Vec<f64>; 2]) -> f64 {
        let d: Vec<f64> = w.iter().zip(origin).map(|(x, o)| x - o).collect();
        let pa: f64 = d.iter().zip(&basis[0]).map(|(x, y)| x * y).sum();
        let pb: f64 = d.iter().zip(&basis[1]).map(|(x, y)| x * y).sum();
        d.iter()
            .enumerate()
            .map(|(j, x)| (x - pa * basis[0][j] - pb * basis[1][j]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn random_init_constant_feature() {
        let data = Dataset::new(vec![2.5, -1.0, 2.5, -1.0, 2.5, -1.0], 2).unwrap();
        let topo = GridTopology::rectangular(3, 2).unwrap();
        let m = SomModel::init_random(topo, 2, &data, 9).unwrap();
        for i in 0..6 {
            assert_eq!(m.neuron(i), &[2.5, -1.0]);
        }
    }

    #[test]
    fn random_init_is_seeded_and_bounded() {
        let (data, _, _) = plane_data(50, 4, 1);
        let topo = GridTopology::hexagonal(4, 4).unwrap();
        let a = SomModel::init_random(topo, 4, &data, 3).unwrap();
        assert_eq!(a, SomModel::init_random(topo, 4, &data, 3).unwrap());
        assert_ne!(a, SomModel::init_random(topo, 4, &data, 4).unwrap());
        for j in 0..4 {
            let col = data.column(j);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for i in 0..16 {
                assert!((lo..=hi).contains(&a.neuron(i)[j]));
            }
        }
    }

    #[test]
    fn init_errors() {
        let topo = GridTopology::rectangular(2, 2).unwrap();
        let data = Dataset::new(vec![1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert!(SomModel::init_random(topo, 3, &data, 0).is_err());
        assert!(SomModel::init_pca(topo, 3, &data).is_err());
        let empty = Dataset::new(vec![], 2).unwrap();
        assert!(SomModel::init_random(topo, 2, &empty, 0).is_err());
        let single = Dataset::new(vec![1.0, 2.0], 2).unwrap();
        assert!(SomModel::init_pca(topo, 2, &single).is_err());
    }

    #[test]
    fn pca_init_lies_on_data_plane() {
        for (n, dim) in [(200, 300), (400, 12)] {
            let (data, origin, basis) = plane_data(n, dim, 7);
            let topo = GridTopology::rectangular(6, 4).unwrap();
            let init = SomModel::init_pca(topo, dim, &data).unwrap();
            assert!(!init.fell_back);
            for i in 0..topo.len() {
                let r = plane_residual(init.model.neuron(i), &origin, &basis);
                assert!(r <= 1e-8, "residual {r} for n={n} dim={dim}");
            }
        }
    }

    #[test]
    fn pca_init_rows_follow_dominant_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut feats = Vec::new();
        for _ in 0..500 {
            let z: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
            feats.extend([5.0 * z[0], 1.0 * z[1], 0.2 * z[2]]);
        }
        let data = Dataset::new(feats, 3).unwrap();
        let topo = GridTopology::rectangular(5, 5).unwrap();
        let init = SomModel::init_pca(topo, 3, &data).unwrap();
        let m = &init.model;
        let w = |r, c| m.weight(NeuronCoord::new(r, c)).unwrap().to_vec();
        let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let row_span = dist(&w(0, 2), &w(4, 2));
        let col_span = dist(&w(2, 0), &w(2, 4));
        assert!(row_span > col_span, "{row_span} vs {col_span}");
        assert!(init.scales[0] > 4.0 && init.scales[1] < 1.5);
        // the first component is (close to) the x axis
        let d = w(4, 2);
        assert!(d[0].abs() > 5.0 * d[1].abs());
    }

    #[test]
    fn pca_init_falls_back_on_constant_data() {
        let row = [1.5, -2.0, 0.25];
        let data = Dataset::new(row.repeat(20), 3).unwrap();
        let topo = GridTopology::rectangular(3, 3).unwrap();
        let init = SomModel::init_pca(topo, 3, &data).unwrap();
        assert!(init.fell_back);
        assert_eq!(init.model, SomModel::init_random(topo, 3, &data, 0).unwrap());
    }

    #[test]
    fn pca_init_single_feature() {
        let data = Dataset::new(vec![0.0, 1.0, 2.0, 3.0], 1).unwrap();
        let topo = GridTopology::rectangular(3, 2).unwrap();
        let init = SomModel::init_pca(topo, 1, &data).unwrap();
        assert!(!init.fell_back);
        assert_eq!(init.model.neuron(0)[0], init.model.neuron(1)[0]);
    }
}
