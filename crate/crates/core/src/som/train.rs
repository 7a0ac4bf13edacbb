use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::SomModel;
use crate::data::Dataset;
use crate::error::{Result, SomError};
use crate::kernels::{default_gamma, lr_step, replay, sigma_step, ScheduleKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UpdateMode {
    /// Sequential per-sample updates.
    Online,
    /// One kernel-weighted mean per neuron per epoch.
    Batch,
}

impl UpdateMode {
    pub fn name(self) -> &'static str {
        match self {
            UpdateMode::Online => "online",
            UpdateMode::Batch => "batch",
        }
    }
}

impl fmt::Display for UpdateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UpdateMode {
    type Err = SomError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "online" => Ok(UpdateMode::Online),
            "batch" => Ok(UpdateMode::Batch),
            other => Err(SomError::Parameter(format!("unknown update mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr0: f64,
    pub sigma0: f64,
    pub lr_schedule: ScheduleKind,
    pub sigma_schedule: ScheduleKind,
    pub update_mode: UpdateMode,
    pub seed: u64,
    /// Ring distance above which BMU and second BMU count as non-adjacent.
    pub d_th: f64,
    /// Inverse learning-rate decay rate; `None` means `epochs / 100`.
    pub gamma: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            lr0: 0.5,
            sigma0: 4.0,
            lr_schedule: ScheduleKind::Linear,
            sigma_schedule: ScheduleKind::Inverse,
            update_mode: UpdateMode::Batch,
            seed: 0,
            d_th: 1.0,
            gamma: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(SomError::Parameter("epochs must be >= 1".into()));
        }
        if !(self.lr0 >= 0.0) || !self.lr0.is_finite() {
            return Err(SomError::Parameter(format!("learning rate must be >= 0, got {}", self.lr0)));
        }
        if !(self.sigma0 >= 1.0) || !self.sigma0.is_finite() {
            return Err(SomError::Parameter(format!("sigma0 must be >= 1, got {}", self.sigma0)));
        }
        if !(self.d_th > 0.0) {
            return Err(SomError::Parameter(format!("d_th must be positive, got {}", self.d_th)));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0) {
                return Err(SomError::Parameter(format!("gamma must be positive, got {g}")));
            }
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or_else(|| default_gamma(self.epochs))
    }

    /// Learning rate and width used at each epoch, `t = 0..epochs`.
    pub fn schedules(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        self.validate()?;
        let gamma = self.gamma();
        let mut lr = replay(self.lr0, self.epochs, gamma, |s| lr_step(self.lr_schedule, s))?;
        let mut sigma = replay(self.sigma0, self.epochs, gamma, |s| sigma_step(self.sigma_schedule, s))?;
        lr.truncate(self.epochs);
        sigma.truncate(self.epochs);
        Ok((lr, sigma))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Training-set quantization error after each epoch.
    pub qe_curve: Vec<f64>,
    /// Training-set topographic error after each epoch.
    pub te_curve: Vec<f64>,
    /// Total time spent in `fit`.
    pub wall_seconds: f64,
    /// Share of `wall_seconds` spent computing the per-epoch curves.
    pub metrics_seconds: f64,
}

impl FitReport {
    pub fn train_seconds(&self) -> f64 {
        (self.wall_seconds - self.metrics_seconds).max(0.0)
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(SomError::Parameter(format!("neighborhood width must be positive, got {sigma}")));
    }
    Ok(())
}

impl SomModel {
    /// One pass of sequential updates over `data` in an order shuffled by
    /// `shuffle_seed`: `w += alpha * h * (x - w)` for every neuron.
    pub fn online_epoch(&mut self, data: &Dataset, alpha: f64, sigma: f64, shuffle_seed: u64) -> Result<()> {
        self.check_data(data)?;
        check_sigma(sigma)?;
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(SomError::Parameter(format!("learning rate must be >= 0, got {alpha}")));
        }
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        let positions = self.positions();
        let dim = self.dim;
        for &s in &order {
            let x = data.row(s);
            let (bmu, _) = self.bmu_index(x);
            let center = positions[bmu];
            for (j, w) in self.weights.chunks_exact_mut(dim).enumerate() {
                let h = self.kernel.value_unchecked(center.distance(positions[j]), sigma);
                if h == 0.0 {
                    continue;
                }
                let step = alpha * h;
                for (wk, xk) in w.iter_mut().zip(x) {
                    *wk += step * (xk - *wk);
                }
            }
        }
        Ok(())
    }

    /// Replaces every neuron by the kernel-weighted mean of the data, with
    /// BMUs taken against the codebook at the start of the epoch. Neurons
    /// whose total kernel weight is zero are left unchanged.
    pub fn batch_epoch(&mut self, data: &Dataset, sigma: f64) -> Result<()> {
        self.check_data(data)?;
        check_sigma(sigma)?;
        if data.is_empty() {
            return Err(SomError::Input("batch update on an empty dataset".into()));
        }
        let dim = self.dim;
        let n = self.n_neurons();
        let bmus = self.bmu_indices(data);

        // Samples grouped by BMU: per-neuron sums and counts.
        let mut sums = vec![0.0; n * dim];
        let mut counts = vec![0usize; n];
        for (s, &(b, _)) in bmus.iter().enumerate() {
            counts[b] += 1;
            for (acc, v) in sums[b * dim..(b + 1) * dim].iter_mut().zip(data.row(s)) {
                *acc += v;
            }
        }
        let occupied: Vec<usize> = (0..n).filter(|&b| counts[b] > 0).collect();
        let positions = self.positions();
        let kernel = self.kernel;

        self.weights.par_chunks_mut(dim).enumerate().for_each(|(j, w)| {
            let pj = positions[j];
            let mut num = vec![0.0; dim];
            let mut den = 0.0;
            for &b in &occupied {
                let h = kernel.value_unchecked(positions[b].distance(pj), sigma);
                if h == 0.0 {
                    continue;
                }
                den += h * counts[b] as f64;
                for (acc, v) in num.iter_mut().zip(&sums[b * dim..(b + 1) * dim]) {
                    *acc += h * v;
                }
            }
            if den != 0.0 {
                for (wk, nk) in w.iter_mut().zip(&num) {
                    *wk = nk / den;
                }
            }
        });
        Ok(())
    }

    /// Trains for `cfg.epochs` epochs, recording training-set QE and TE after
    /// each one.
    pub fn fit(&mut self, data: &Dataset, cfg: &TrainConfig) -> Result<FitReport> {
        cfg.validate()?;
        self.check_data(data)?;
        if data.is_empty() {
            return Err(SomError::Input("cannot train on an empty dataset".into()));
        }
        if self.n_neurons() < 2 {
            return Err(SomError::Config("training needs a grid with at least two neurons".into()));
        }
        let (lr, sigma) = cfg.schedules()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

        let start = Instant::now();
        let mut metrics_seconds = 0.0;
        let mut qe_curve = Vec::with_capacity(cfg.epochs);
        let mut te_curve = Vec::with_capacity(cfg.epochs);
        for t in 0..cfg.epochs {
            match cfg.update_mode {
                UpdateMode::Online => {
                    let shuffle_seed = rng.random();
                    self.online_epoch(data, lr[t], sigma[t], shuffle_seed)?
                }
                UpdateMode::Batch => self.batch_epoch(data, sigma[t])?,
            }
            let m0 = Instant::now();
            let pairs = self.bmu_pairs(data);
            qe_curve.push(pairs.iter().map(|p| p.best_dist).sum::<f64>() / data.len() as f64);
            te_curve.push(self.te_from_pairs(&pairs, cfg.d_th));
            metrics_seconds += m0.elapsed().as_secs_f64();
        }
        Ok(FitReport {
            qe_curve,
            te_curve,
            wall_seconds: start.elapsed().as_secs_f64(),
            metrics_seconds,
        })
    }
}
