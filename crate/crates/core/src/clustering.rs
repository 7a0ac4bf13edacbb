//! Clustering of trained neurons: k-means and diagonal Gaussian mixtures over
//! codebook, grid-position or combined feature spaces, elbow selection and
//! cluster quality scores.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::MapLayer;
use crate::data::Dataset;
use crate::error::{Result, SomError};
use crate::som::SomModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    Weights,
    Positions,
    Combined,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterSpace {
    pub kind: SpaceKind,
    /// Scale applied to the position columns of a combined space.
    pub position_weight: f64,
}

impl ClusterSpace {
    pub const WEIGHTS: ClusterSpace = ClusterSpace {
        kind: SpaceKind::Weights,
        position_weight: 1.0,
    };
    pub const POSITIONS: ClusterSpace = ClusterSpace {
        kind: SpaceKind::Positions,
        position_weight: 1.0,
    };

    pub fn combined(lambda: f64) -> Result<Self> {
        let s = ClusterSpace {
            kind: SpaceKind::Combined,
            position_weight: lambda,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.position_weight > 0.0 && self.position_weight.is_finite()) {
            return Err(SomError::Parameter(format!(
                "position weight must be positive, got {}",
                self.position_weight
            )));
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            SpaceKind::Weights => "weights",
            SpaceKind::Positions => "positions",
            SpaceKind::Combined => "combined",
        }
    }
}

impl fmt::Display for ClusterSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClusterSpace {
    type Err = SomError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "weights" | "weight" => Ok(Self::WEIGHTS),
            "positions" | "position" => Ok(Self::POSITIONS),
            "combined" => Self::combined(1.0),
            other => Err(SomError::Parameter(format!(
                "unknown cluster space '{other}' (expected weights, positions or combined)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    KMeans,
    Gmm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 2] = [Algorithm::KMeans, Algorithm::Gmm];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::KMeans => "kmeans",
            Algorithm::Gmm => "gmm",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = SomError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kmeans" | "k-means" => Ok(Algorithm::KMeans),
            "gmm" => Ok(Algorithm::Gmm),
            other => Err(SomError::Parameter(format!("unknown algorithm '{other}' (expected kmeans or gmm)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    Inertia(f64),
    LogLikelihood(f64),
}

impl Objective {
    pub fn value(self) -> f64 {
        match self {
            Objective::Inertia(v) | Objective::LogLikelihood(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    /// Cluster id per row, contiguous in `0..k`.
    pub assignment: Vec<usize>,
    pub k: usize,
    pub objective: Objective,
    /// Inertia (k-means) or log-likelihood (GMM) after each iteration.
    pub trace: Vec<f64>,
    /// `k x p` row-major centroids or component means.
    pub centers: Vec<f64>,
    pub space: Option<ClusterSpace>,
}

impl ClusterResult {
    pub fn layer(&self, model: &SomModel) -> Result<MapLayer> {
        MapLayer::new(
            *model.topology(),
            self.assignment.iter().map(|&c| Some(c as f64)).collect(),
            "cluster",
        )
    }
}

fn unit_interval(values: &mut [f64]) {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    for v in values.iter_mut() {
        *v = if hi > lo { (*v - lo) / (hi - lo) } else { 0.0 };
    }
}

/// Feature matrix, one row per neuron in row-major order.
pub fn cluster_features(model: &SomModel, space: ClusterSpace) -> Result<Dataset> {
    space.validate()?;
    let n = model.n_neurons();
    let positions = || {
        let pos = model.positions();
        let mut xs: Vec<f64> = pos.iter().map(|p| p.x).collect();
        let mut ys: Vec<f64> = pos.iter().map(|p| p.y).collect();
        unit_interval(&mut xs);
        unit_interval(&mut ys);
        (xs, ys)
    };
    match space.kind {
        SpaceKind::Weights => Dataset::new(model.weights().to_vec(), model.dim()),
        SpaceKind::Positions => {
            let (xs, ys) = positions();
            Dataset::new(xs.iter().zip(&ys).flat_map(|(&x, &y)| [x, y]).collect(), 2)
        }
        SpaceKind::Combined => {
            let k = model.dim();
            let codebook = Dataset::new(model.weights().to_vec(), k)?;
            let scaled = crate::data::Scaler::fit(&codebook)?.transform(&codebook)?;
            let (xs, ys) = positions();
            let lambda = space.position_weight;
            let mut out = Vec::with_capacity(n * (k + 2));
            for i in 0..n {
                out.extend_from_slice(scaled.row(i));
                out.push(lambda * xs[i]);
                out.push(lambda * ys[i]);
            }
            Dataset::new(out, k + 2)
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(x: &[f64], centers: &[f64], p: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, mu) in centers.chunks_exact(p).enumerate() {
        let d = sq_dist(x, mu);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn check_k(features: &Dataset, k: usize) -> Result<()> {
    if k == 0 || k > features.len() {
        return Err(SomError::Parameter(format!(
            "k must be in 1..={} for {} rows, got {k}",
            features.len(),
            features.len()
        )));
    }
    Ok(())
}

/// Renumbers ids in order of first appearance over the used ids, dropping
/// unused ones. Returns the new number of clusters and the kept old ids.
fn compact(assignment: &mut [usize], k: usize) -> Vec<usize> {
    let mut used = vec![false; k];
    for &a in assignment.iter() {
        used[a] = true;
    }
    let kept: Vec<usize> = (0..k).filter(|&c| used[c]).collect();
    let mut remap = vec![usize::MAX; k];
    for (new, &old) in kept.iter().enumerate() {
        remap[old] = new;
    }
    for a in assignment.iter_mut() {
        *a = remap[*a];
    }
    kept
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// k-means++ restarts; the lowest-inertia run is kept.
    pub n_init: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tol: 1e-6,
            n_init: 10,
        }
    }
}

fn kmeans_pp(features: &Dataset, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = features.len();
    let p = features.dim();
    let mut centers = Vec::with_capacity(k * p);
    centers.extend_from_slice(features.row(rng.random_range(0..n)));
    let mut d2: Vec<f64> = features.rows().map(|x| sq_dist(x, &centers[..p])).collect();
    while centers.len() < k * p {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && r < d {
                    pick = i;
                    break;
                }
                r -= d;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let c = features.row(pick).to_vec();
        for (i, x) in features.rows().enumerate() {
            d2[i] = d2[i].min(sq_dist(x, &c));
        }
        centers.extend_from_slice(&c);
    }
    centers
}

fn lloyd(features: &Dataset, mut centers: Vec<f64>, opts: KMeansOptions) -> ClusterResult {
    let n = features.len();
    let p = features.dim();
    let k = centers.len() / p;
    let mut assignment = vec![0; n];
    let mut trace = Vec::new();
    for _ in 0..opts.max_iter.max(1) {
        let nearest_rows: Vec<(usize, f64)> = features
            .features()
            .par_chunks(p * 64)
            .flat_map_iter(|block| block.chunks_exact(p).map(|x| nearest(x, &centers, p)).collect::<Vec<_>>())
            .collect();
        for (a, (c, _)) in assignment.iter_mut().zip(&nearest_rows) {
            *a = *c;
        }
        let mut sums = vec![0.0; k * p];
        let mut counts = vec![0usize; k];
        for (x, &c) in features.rows().zip(&assignment) {
            counts[c] += 1;
            for (s, v) in sums[c * p..(c + 1) * p].iter_mut().zip(x) {
                *s += v;
            }
        }
        let mut shift: f64 = 0.0;
        let mut reseeded = false;
        let mut taken = vec![false; n];
        for c in 0..k {
            let new: Vec<f64> = if counts[c] > 0 {
                sums[c * p..(c + 1) * p].iter().map(|s| s / counts[c] as f64).collect()
            } else {
                // farthest row from its centroid that is not the only member
                // of its cluster
                let far = (0..n)
                    .filter(|&i| !taken[i] && counts[assignment[i]] > 1)
                    .max_by(|&a, &b| nearest_rows[a].1.total_cmp(&nearest_rows[b].1).then(b.cmp(&a)));
                match far {
                    Some(i) => {
                        taken[i] = true;
                        reseeded = true;
                        features.row(i).to_vec()
                    }
                    None => centers[c * p..(c + 1) * p].to_vec(),
                }
            };
            shift = shift.max(sq_dist(&new, &centers[c * p..(c + 1) * p]));
            centers[c * p..(c + 1) * p].copy_from_slice(&new);
        }
        let inertia: f64 = features
            .rows()
            .zip(&assignment)
            .map(|(x, &c)| sq_dist(x, &centers[c * p..(c + 1) * p]))
            .sum();
        trace.push(inertia);
        if shift <= opts.tol && !reseeded {
            break;
        }
    }
    let kept = compact(&mut assignment, k);
    let centers = kept.iter().flat_map(|&c| centers[c * p..(c + 1) * p].to_vec()).collect();
    ClusterResult {
        k: kept.len(),
        assignment,
        objective: Objective::Inertia(*trace.last().expect("at least one iteration")),
        trace,
        centers,
        space: None,
    }
}

pub fn kmeans(features: &Dataset, k: usize, seed: u64) -> Result<ClusterResult> {
    kmeans_with(features, k, seed, KMeansOptions::default())
}

pub fn kmeans_with(features: &Dataset, k: usize, seed: u64, opts: KMeansOptions) -> Result<ClusterResult> {
    check_k(features, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<ClusterResult> = None;
    for _ in 0..opts.n_init.max(1) {
        let centers = kmeans_pp(features, k, &mut rng);
        let run = lloyd(features, centers, opts);
        if best.as_ref().is_none_or(|b| run.objective.value() < b.objective.value()) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Variance floor.
    pub reg: f64,
}

impl Default for GmmOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-6,
            reg: 1e-6,
        }
    }
}

pub fn gmm(features: &Dataset, k: usize, seed: u64) -> Result<ClusterResult> {
    gmm_with(features, k, seed, GmmOptions::default())
}

/// Diagonal-covariance EM, started from a k-means partition.
pub fn gmm_with(features: &Dataset, k: usize, seed: u64, opts: GmmOptions) -> Result<ClusterResult> {
    check_k(features, k)?;
    if !(opts.reg > 0.0) {
        return Err(SomError::Parameter(format!("reg must be positive, got {}", opts.reg)));
    }
    let init = kmeans(features, k, seed)?;
    let n = features.len();
    let p = features.dim();
    let k = init.k;

    let mut means = init.centers.clone();
    let mut vars = vec![0.0; k * p];
    let mut mix = vec![0.0; k];
    for (x, &c) in features.rows().zip(&init.assignment) {
        mix[c] += 1.0;
        for j in 0..p {
            let d = x[j] - means[c * p + j];
            vars[c * p + j] += d * d;
        }
    }
    for c in 0..k {
        for j in 0..p {
            vars[c * p + j] = (vars[c * p + j] / mix[c]).max(opts.reg);
        }
        mix[c] /= n as f64;
    }

    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    let mut resp = vec![0.0; n * k];
    let mut trace: Vec<f64> = Vec::new();
    for _ in 0..opts.max_iter.max(1) {
        // E-step
        let consts: Vec<f64> = (0..k)
            .map(|c| mix[c].ln() - 0.5 * (0..p).map(|j| ln_2pi + vars[c * p + j].ln()).sum::<f64>())
            .collect();
        let mut loglik = 0.0;
        for (i, x) in features.rows().enumerate() {
            let r = &mut resp[i * k..(i + 1) * k];
            for c in 0..k {
                let q: f64 = (0..p)
                    .map(|j| {
                        let d = x[j] - means[c * p + j];
                        d * d / vars[c * p + j]
                    })
                    .sum();
                r[c] = consts[c] - 0.5 * q;
            }
            let top = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = top + r.iter().map(|v| (v - top).exp()).sum::<f64>().ln();
            for v in r.iter_mut() {
                *v = (*v - lse).exp();
            }
            loglik += lse;
        }
        let prev = trace.last().copied();
        trace.push(loglik);
        if let Some(prev) = prev {
            if loglik - prev < opts.tol {
                break;
            }
        }
        // M-step
        for c in 0..k {
            let nk: f64 = (0..n).map(|i| resp[i * k + c]).sum();
            if nk <= f64::MIN_POSITIVE {
                continue;
            }
            for j in 0..p {
                let mu = (0..n).map(|i| resp[i * k + c] * features.row(i)[j]).sum::<f64>() / nk;
                let var = (0..n)
                    .map(|i| {
                        let d = features.row(i)[j] - mu;
                        resp[i * k + c] * d * d
                    })
                    .sum::<f64>()
                    / nk;
                means[c * p + j] = mu;
                vars[c * p + j] = var.max(opts.reg);
            }
            mix[c] = nk / n as f64;
        }
    }
    let mut assignment: Vec<usize> = resp
        .chunks_exact(k)
        .map(|r| {
            let mut best = 0;
            for c in 1..k {
                if r[c] > r[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    let kept = compact(&mut assignment, k);
    Ok(ClusterResult {
        k: kept.len(),
        assignment,
        objective: Objective::LogLikelihood(*trace.last().expect("at least one iteration")),
        trace,
        centers: kept.iter().flat_map(|&c| means[c * p..(c + 1) * p].to_vec()).collect(),
        space: None,
    })
}

pub fn run(features: &Dataset, algorithm: Algorithm, k: usize, seed: u64) -> Result<ClusterResult> {
    match algorithm {
        Algorithm::KMeans => kmeans(features, k, seed),
        Algorithm::Gmm => gmm(features, k, seed),
    }
}

/// Clusters the neurons of `model` in the given space.
pub fn cluster(model: &SomModel, space: ClusterSpace, algorithm: Algorithm, k: usize, seed: u64) -> Result<ClusterResult> {
    let features = cluster_features(model, space)?;
    let mut result = run(&features, algorithm, k, seed)?;
    result.space = Some(space);
    Ok(result)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Elbow {
    pub ks: Vec<usize>,
    pub inertias: Vec<f64>,
    pub selected: usize,
}

/// Interior point with the largest second difference; ties go to the
/// smaller k.
pub fn select_elbow(ks: &[usize], inertias: &[f64]) -> Result<usize> {
    if ks.len() < 3 || ks.len() != inertias.len() {
        return Err(SomError::Parameter(format!(
            "elbow needs at least 3 aligned points, got {} k values and {} inertias",
            ks.len(),
            inertias.len()
        )));
    }
    let mut best = (1, f64::NEG_INFINITY);
    for i in 1..ks.len() - 1 {
        let d2 = inertias[i - 1] - 2.0 * inertias[i] + inertias[i + 1];
        if d2 > best.1 {
            best = (i, d2);
        }
    }
    Ok(ks[best.0])
}

/// K-means over consecutive k. Each k keeps the better of a fresh run and a
/// run warm-started from the previous centroids plus the row farthest from
/// its centroid; the warm start makes inertia non-increasing in k.
pub fn elbow(features: &Dataset, k_range: std::ops::RangeInclusive<usize>, seed: u64) -> Result<Elbow> {
    let (lo, hi) = (*k_range.start(), *k_range.end());
    if hi < lo || hi - lo < 2 {
        return Err(SomError::Parameter(format!("elbow needs at least 3 k values, got {lo}..={hi}")));
    }
    check_k(features, lo)?;
    check_k(features, hi)?;
    let p = features.dim();
    let mut ks = Vec::new();
    let mut inertias = Vec::new();
    let mut prev = kmeans(features, lo, seed)?;
    ks.push(lo);
    inertias.push(prev.objective.value());
    for k in lo + 1..=hi {
        let mut centers = prev.centers.clone();
        let mut existing = prev.k;
        let mut d: Vec<(f64, usize)> = features
            .rows()
            .zip(&prev.assignment)
            .enumerate()
            .map(|(i, (x, &c))| (sq_dist(x, &prev.centers[c * p..(c + 1) * p]), i))
            .collect();
        d.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut far = d.into_iter();
        while existing < k {
            let (_, i) = far.next().expect("k <= rows");
            centers.extend_from_slice(features.row(i));
            existing += 1;
        }
        let warm = lloyd(features, centers, KMeansOptions::default());
        let fresh = kmeans(features, k, seed)?;
        let next = if fresh.objective.value() < warm.objective.value() { fresh } else { warm };
        ks.push(k);
        inertias.push(next.objective.value());
        prev = next;
    }
    let selected = select_elbow(&ks, &inertias)?;
    Ok(Elbow { ks, inertias, selected })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quality {
    pub silhouette: f64,
    pub davies_bouldin: f64,
    pub calinski_harabasz: f64,
}

pub fn quality_metrics(features: &Dataset, assignment: &[usize]) -> Result<Quality> {
    if assignment.len() != features.len() {
        return Err(SomError::Shape {
            expected: features.len(),
            actual: assignment.len(),
        });
    }
    let mut labels = assignment.to_vec();
    let k_raw = labels.iter().copied().max().map_or(0, |m| m + 1);
    let k = compact(&mut labels, k_raw).len();
    if k < 2 {
        return Err(SomError::Metric(format!("quality metrics need at least 2 clusters, got {k}")));
    }
    let n = features.len();
    let p = features.dim();
    let mut sizes = vec![0usize; k];
    let mut centroids = vec![0.0; k * p];
    for (x, &c) in features.rows().zip(&labels) {
        sizes[c] += 1;
        for j in 0..p {
            centroids[c * p + j] += x[j];
        }
    }
    for c in 0..k {
        for j in 0..p {
            centroids[c * p + j] /= sizes[c] as f64;
        }
    }

    let s: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = labels[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            let xi = features.row(i);
            for (j, x) in features.rows().enumerate() {
                if j != i {
                    sums[labels[j]] += sq_dist(xi, x).sqrt();
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m > 0.0 { (b - a) / m } else { 0.0 }
        })
        .collect();
    let silhouette = s.iter().sum::<f64>() / n as f64;

    let mut scatter = vec![0.0; k];
    for (x, &c) in features.rows().zip(&labels) {
        scatter[c] += sq_dist(x, &centroids[c * p..(c + 1) * p]).sqrt();
    }
    for c in 0..k {
        scatter[c] /= sizes[c] as f64;
    }
    let mut db = 0.0;
    for a in 0..k {
        let mut worst: f64 = 0.0;
        for b in 0..k {
            if a == b {
                continue;
            }
            let d = sq_dist(&centroids[a * p..(a + 1) * p], &centroids[b * p..(b + 1) * p]).sqrt();
            if d > 0.0 {
                worst = worst.max((scatter[a] + scatter[b]) / d);
            }
        }
        db += worst;
    }
    let davies_bouldin = db / k as f64;

    let mut grand = vec![0.0; p];
    for x in features.rows() {
        for j in 0..p {
            grand[j] += x[j] / n as f64;
        }
    }
    let between: f64 = (0..k)
        .map(|c| sizes[c] as f64 * sq_dist(&centroids[c * p..(c + 1) * p], &grand))
        .sum();
    let within: f64 = features
        .rows()
        .zip(&labels)
        .map(|(x, &c)| sq_dist(x, &centroids[c * p..(c + 1) * p]))
        .sum();
    let calinski_harabasz = if within == 0.0 {
        1.0
    } else {
        between * (n - k) as f64 / (within * (k - 1) as f64)
    };
    Ok(Quality {
        silhouette,
        davies_bouldin,
        calinski_harabasz,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub space: ClusterSpace,
    pub algorithm: Algorithm,
    pub k: usize,
    pub quality: Quality,
    pub objective: Objective,
}

pub fn compare(
    model: &SomModel,
    spaces: &[ClusterSpace],
    algorithms: &[Algorithm],
    k: usize,
    seed: u64,
) -> Result<Vec<CompareRow>> {
    let mut rows = Vec::with_capacity(spaces.len() * algorithms.len());
    for &space in spaces {
        let features = cluster_features(model, space)?;
        for &algorithm in algorithms {
            let result = run(&features, algorithm, k, seed)?;
            rows.push(CompareRow {
                space,
                algorithm,
                k: result.k,
                quality: quality_metrics(&features, &result.assignment)?,
                objective: result.objective,
            });
        }
    }
    Ok(rows)
}

pub fn write_compare_csv<W: Write>(rows: &[CompareRow], mut w: W) -> Result<()> {
    writeln!(w, "space,algorithm,k,silhouette,davies_bouldin,calinski_harabasz,inertia_or_loglik")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.space,
            r.algorithm,
            r.k,
            r.quality.silhouette,
            r.quality.davies_bouldin,
            r.quality.calinski_harabasz,
            r.objective.value()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use rand_distr::{Distribution, StandardNormal};

    use super::*;
    use crate::grid::GridTopology;
    use crate::som::TrainConfig;

    /// Three blobs with spread 0.3 around well-separated centres.
    fn blobs(per: usize, seed: u64) -> (Dataset, Vec<usize>) {
        let centres = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (l, c) in centres.iter().enumerate() {
            for _ in 0..per {
                let nx: f64 = StandardNormal.sample(&mut rng);
                let ny: f64 = StandardNormal.sample(&mut rng);
                rows.push(vec![c[0] + 0.3 * nx, c[1] + 0.3 * ny]);
                labels.push(l);
            }
        }
        (Dataset::from_rows(&rows).unwrap(), labels)
    }

    fn same_partition(a: &[usize], b: &[usize]) -> bool {
        let mut ab = std::collections::BTreeMap::new();
        let mut ba = std::collections::BTreeMap::new();
        a.iter().zip(b).all(|(x, y)| *ab.entry(x).or_insert(y) == y && *ba.entry(y).or_insert(x) == x)
    }

    fn model(rows: usize, cols: usize, dim: usize, seed: u64) -> SomModel {
        crate::som::tests::random_model(rows, cols, dim, seed)
    }

    #[test]
    fn feature_spaces() {
        let m = model(2, 2, 3, 0);
        let pos = cluster_features(&m, ClusterSpace::POSITIONS).unwrap();
        assert_eq!(pos.features(), &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let w = cluster_features(&m, ClusterSpace::WEIGHTS).unwrap();
        assert_eq!(w.features(), m.weights());

        let big = model(4, 5, 3, 1);
        let one = cluster_features(&big, ClusterSpace::combined(1.0).unwrap()).unwrap();
        let three = cluster_features(&big, ClusterSpace::combined(3.0).unwrap()).unwrap();
        assert_eq!(one.dim(), 5);
        for i in 0..20 {
            assert_eq!(one.row(i)[..3], three.row(i)[..3]);
            for j in 3..5 {
                assert!((3.0 * one.row(i)[j] - three.row(i)[j]).abs() < 1e-15);
            }
        }
        assert!(ClusterSpace::combined(0.0).is_err());
        assert!(ClusterSpace::combined(f64::NAN).is_err());
    }

    #[test]
    fn hex_positions_span_unit_square() {
        let m = SomModel::new(GridTopology::hexagonal(3, 3).unwrap(), 1, vec![0.0; 9]).unwrap();
        let pos = cluster_features(&m, ClusterSpace::POSITIONS).unwrap();
        let xs = pos.column(0);
        let ys = pos.column(1);
        for v in [&xs, &ys] {
            assert_eq!(v.iter().copied().fold(f64::INFINITY, f64::min), 0.0);
            assert_eq!(v.iter().copied().fold(f64::NEG_INFINITY, f64::max), 1.0);
        }
    }

    #[test]
    fn kmeans_edge_cases() {
        let (data, _) = blobs(10, 1);
        let one = kmeans(&data, 1, 0).unwrap();
        assert!(one.assignment.iter().all(|&a| a == 0));
        for j in 0..2 {
            let mean = data.column(j).iter().sum::<f64>() / 30.0;
            assert!((one.centers[j] - mean).abs() < 1e-12);
        }
        let all = kmeans(&data, 30, 0).unwrap();
        assert_eq!(all.objective.value(), 0.0);
        assert_eq!(all.k, 30);
        assert!(kmeans(&data, 31, 0).is_err());
        assert!(kmeans(&data, 0, 0).is_err());
    }

    #[test]
    fn kmeans_recovers_blobs() {
        let (data, labels) = blobs(40, 2);
        for seed in 0..5 {
            let r = kmeans(&data, 3, seed).unwrap();
            assert!(same_partition(&r.assignment, &labels), "seed {seed}");
            assert!(r.trace.windows(2).all(|w| w[1] <= w[0] + 1e-9));
            assert_eq!(r, kmeans(&data, 3, seed).unwrap());
        }
    }

    #[test]
    fn kmeans_duplicate_rows_keep_ids_contiguous() {
        let data = Dataset::new(vec![1.0, 1.0, 1.0, 2.0], 1).unwrap();
        let r = kmeans(&data, 3, 0).unwrap();
        assert_eq!(r.k, 2);
        let mut ids = r.assignment.clone();
        ids.sort();
        ids.dedup();
        assert_eq!(ids, vec![0, 1]);
    }

    #[test]
    fn gmm_cases() {
        let (data, labels) = blobs(40, 3);
        let one = gmm(&data, 1, 0).unwrap();
        assert!(one.assignment.iter().all(|&a| a == 0));
        for j in 0..2 {
            let mean = data.column(j).iter().sum::<f64>() / 120.0;
            assert!((one.centers[j] - mean).abs() < 1e-9);
        }
        let three = gmm(&data, 3, 4).unwrap();
        assert!(same_partition(&three.assignment, &labels));
        assert!(same_partition(&three.assignment, &kmeans(&data, 3, 4).unwrap().assignment));
        assert!(three.trace.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{:?}", three.trace);
        assert!(matches!(three.objective, Objective::LogLikelihood(_)));
    }

    #[test]
    fn gmm_degenerate_component_is_floored() {
        let data = Dataset::new(vec![0.0, 0.0, 0.0, 5.0, 5.0, 5.0], 1).unwrap();
        let r = gmm(&data, 2, 0).unwrap();
        assert!(r.objective.value().is_finite());
        assert!(same_partition(&r.assignment, &[0, 0, 0, 1, 1, 1]));
    }

    #[test]
    fn elbow_selection_rule() {
        assert_eq!(select_elbow(&[1, 2, 3, 4, 5], &[10.0, 4.0, 3.0, 2.8, 2.7]).unwrap(), 2);
        assert!(select_elbow(&[1, 2], &[1.0, 0.5]).is_err());
        let (data, _) = blobs(10, 0);
        assert!(elbow(&data, 2..=3, 0).is_err());
    }

    #[test]
    fn elbow_finds_three_blobs() {
        let (data, _) = blobs(40, 5);
        let e = elbow(&data, 1..=8, 3).unwrap();
        assert_eq!(e.selected, 3, "{:?}", e.inertias);
        assert!(e.inertias.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(e.ks, (1..=8).collect::<Vec<_>>());
    }

    #[test]
    fn quality_cases() {
        let pair = Dataset::new(vec![0.0, 1.0], 1).unwrap();
        assert_eq!(quality_metrics(&pair, &[0, 1]).unwrap().silhouette, 0.0);

        let (data, labels) = blobs(30, 6);
        let two: Vec<usize> = labels.iter().map(|&l| l.min(1)).collect();
        let sel: Vec<usize> = (0..90).filter(|&i| labels[i] != 2).collect();
        let sub = data.select(&sel);
        let q = quality_metrics(&sub, &sel.iter().map(|&i| two[i]).collect::<Vec<_>>()).unwrap();
        assert!(q.silhouette >= 0.9);
        assert!(q.davies_bouldin < 0.1);
        assert!(q.calinski_harabasz > 1000.0);

        let blob = data.select(&(0..30).collect::<Vec<_>>());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let random: Vec<usize> = (0..30).map(|_| rng.random_range(0..2)).collect();
        assert!(quality_metrics(&blob, &random).unwrap().silhouette.abs() < 0.1);

        assert!(matches!(quality_metrics(&blob, &[0; 30]), Err(SomError::Metric(_))));
        assert!(quality_metrics(&blob, &[0; 3]).is_err());
    }

    #[test]
    fn quality_matches_direct_oracle() {
        let rows = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![4.0, 0.0], vec![5.0, 1.0], vec![9.0, 9.0]];
        let data = Dataset::from_rows(&rows).unwrap();
        let labels = [0, 0, 1, 1, 1];
        let q = quality_metrics(&data, &labels).unwrap();
        let d = |a: usize, b: usize| ((rows[a][0] - rows[b][0]).powi(2) + (rows[a][1] - rows[b][1]).powi(2)).sqrt();
        let mut s = 0.0;
        for i in 0..5 {
            let own: Vec<usize> = (0..5).filter(|&j| j != i && labels[j] == labels[i]).collect();
            let other: Vec<usize> = (0..5).filter(|&j| labels[j] != labels[i]).collect();
            let a = own.iter().map(|&j| d(i, j)).sum::<f64>() / own.len() as f64;
            let b = other.iter().map(|&j| d(i, j)).sum::<f64>() / other.len() as f64;
            s += (b - a) / a.max(b);
        }
        assert!((q.silhouette - s / 5.0).abs() < 1e-12);
        // centroids (0, 0.5) and (6, 10/3)
        let c0 = [0.0, 0.5];
        let c1 = [6.0, 10.0 / 3.0];
        let dist = |x: &[f64], c: &[f64; 2]| ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt();
        let s0 = (dist(&rows[0], &c0) + dist(&rows[1], &c0)) / 2.0;
        let s1 = (2..5).map(|i| dist(&rows[i], &c1)).sum::<f64>() / 3.0;
        let db = (s0 + s1) / dist(&c0, &c1);
        assert!((q.davies_bouldin - db).abs() < 1e-12);
        let g = [18.0 / 5.0, 11.0 / 5.0];
        let bss = 2.0 * (dist(&c0, &g)).powi(2) + 3.0 * dist(&c1, &g).powi(2);
        let wss = (0..2).map(|i| dist(&rows[i], &c0).powi(2)).sum::<f64>()
            + (2..5).map(|i| dist(&rows[i], &c1).powi(2)).sum::<f64>();
        assert!((q.calinski_harabasz - bss * 3.0 / wss).abs() < 1e-9);
    }

    #[test]
    fn compare_table_shape_and_determinism() {
        let (data, _) = blobs(40, 8);
        let topo = GridTopology::rectangular(8, 8).unwrap();
        let mut m = SomModel::init_pca(topo, 2, &data).unwrap().model;
        let cfg = TrainConfig {
            epochs: 30,
            sigma0: 3.0,
            ..TrainConfig::default()
        };
        m.fit(&data, &cfg).unwrap();
        let spaces = [ClusterSpace::WEIGHTS, ClusterSpace::POSITIONS, ClusterSpace::combined(1.0).unwrap()];
        let rows = compare(&m, &spaces, &Algorithm::ALL, 3, 11).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows, compare(&m, &spaces, &Algorithm::ALL, 3, 11).unwrap());
        let best = rows
            .iter()
            .max_by(|a, b| a.quality.silhouette.total_cmp(&b.quality.silhouette))
            .unwrap();
        assert_eq!(best.space.kind, SpaceKind::Weights, "{rows:#?}");

        let mut csv = Vec::new();
        write_compare_csv(&rows, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text.starts_with("space,algorithm,k,silhouette,davies_bouldin,calinski_harabasz,inertia_or_loglik\n"));
    }

    #[test]
    fn names_parse() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        for s in ["weights", "positions", "combined"] {
            assert_eq!(s.parse::<ClusterSpace>().unwrap().name(), s);
        }
        assert!("dbscan".parse::<Algorithm>().is_err());
    }

    mod props {
        use proptest::prelude::*;

        use super::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn metrics_ignore_relabeling(seed in 0u64..1000, shift in 1usize..3) {
                let (data, _) = blobs(8, seed);
                let r = kmeans(&data, 3, seed).unwrap();
                let relabeled: Vec<usize> = r.assignment.iter().map(|&a| (a + shift) % 3).collect();
                let a = quality_metrics(&data, &r.assignment).unwrap();
                let b = quality_metrics(&data, &relabeled).unwrap();
                prop_assert!((a.silhouette - b.silhouette).abs() < 1e-12);
                prop_assert!((a.davies_bouldin - b.davies_bouldin).abs() < 1e-9);
                prop_assert!((a.calinski_harabasz - b.calinski_harabasz).abs() < 1e-6 * a.calinski_harabasz);
            }

            #[test]
            fn lloyd_inertia_never_rises(seed in 0u64..1000, k in 1usize..8) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let flat: Vec<f64> = (0..40 * 3).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
                let data = Dataset::new(flat, 3).unwrap();
                let r = kmeans(&data, k, seed).unwrap();
                prop_assert!(r.trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
                let ids: std::collections::BTreeSet<usize> = r.assignment.iter().copied().collect();
                prop_assert_eq!(ids.into_iter().collect::<Vec<_>>(), (0..r.k).collect::<Vec<_>>());
            }

            #[test]
            fn em_loglik_never_falls(seed in 0u64..1000, k in 1usize..5) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let flat: Vec<f64> = (0..30 * 2).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
                let data = Dataset::new(flat, 2).unwrap();
                let r = gmm(&data, k, seed).unwrap();
                prop_assert!(r.trace.windows(2).all(|w| w[1] >= w[0] - 1e-9));
            }
        }
    }
}
