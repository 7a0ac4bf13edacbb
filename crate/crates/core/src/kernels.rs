//! Neighborhood kernels, feature-space distances and decay schedules.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Result, SomError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NeighborhoodKernel {
    Gaussian,
    /// Ricker wavelet with a `1 / (pi sigma^4)` prefactor. Not re-normalized:
    /// the peak is below 1 whenever `sigma > 1`.
    MexicanHat,
    Bubble,
    Triangle,
}

impl NeighborhoodKernel {
    pub const ALL: [NeighborhoodKernel; 4] = [
        NeighborhoodKernel::Gaussian,
        NeighborhoodKernel::MexicanHat,
        NeighborhoodKernel::Bubble,
        NeighborhoodKernel::Triangle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NeighborhoodKernel::Gaussian => "gaussian",
            NeighborhoodKernel::MexicanHat => "mexican_hat",
            NeighborhoodKernel::Bubble => "bubble",
            NeighborhoodKernel::Triangle => "triangle",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            NeighborhoodKernel::Gaussian => 0,
            NeighborhoodKernel::MexicanHat => 1,
            NeighborhoodKernel::Bubble => 2,
            NeighborhoodKernel::Triangle => 3,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }

    pub fn value(self, d: f64, sigma: f64) -> Result<f64> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(SomError::Parameter(format!("kernel width must be positive, got {sigma}")));
        }
        if !(d >= 0.0) {
            return Err(SomError::Parameter(format!("kernel distance must be >= 0, got {d}")));
        }
        Ok(self.value_unchecked(d, sigma))
    }

    #[inline]
    pub(crate) fn value_unchecked(self, d: f64, sigma: f64) -> f64 {
        match self {
            NeighborhoodKernel::Gaussian => (-(d * d) / (2.0 * sigma * sigma)).exp(),
            NeighborhoodKernel::MexicanHat => {
                let u = d * d / (2.0 * sigma * sigma);
                (1.0 - u) * (-u).exp() / (PI * sigma.powi(4))
            }
            NeighborhoodKernel::Bubble => {
                if d <= sigma {
                    1.0
                } else {
                    0.0
                }
            }
            NeighborhoodKernel::Triangle => (1.0 - d / sigma).max(0.0),
        }
    }
}

impl fmt::Display for NeighborhoodKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NeighborhoodKernel {
    type Err = SomError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "gaussian" => Ok(NeighborhoodKernel::Gaussian),
            "mexican_hat" | "mexican" | "ricker" => Ok(NeighborhoodKernel::MexicanHat),
            "bubble" | "step" => Ok(NeighborhoodKernel::Bubble),
            "triangle" | "linear" => Ok(NeighborhoodKernel::Triangle),
            other => Err(SomError::Parameter(format!("unknown kernel '{other}'"))),
        }
    }
}

/// Convenience wrapper over [`NeighborhoodKernel::value`].
pub fn kernel_value(kernel: NeighborhoodKernel, d: f64, sigma: f64) -> Result<f64> {
    kernel.value(d, sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureDistance {
    Cosine,
    Euclidean,
    Manhattan,
    Chebyshev,
}

impl FeatureDistance {
    pub const ALL: [FeatureDistance; 4] = [
        FeatureDistance::Cosine,
        FeatureDistance::Euclidean,
        FeatureDistance::Manhattan,
        FeatureDistance::Chebyshev,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureDistance::Cosine => "cosine",
            FeatureDistance::Euclidean => "euclidean",
            FeatureDistance::Manhattan => "manhattan",
            FeatureDistance::Chebyshev => "chebyshev",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            FeatureDistance::Cosine => 0,
            FeatureDistance::Euclidean => 1,
            FeatureDistance::Manhattan => 2,
            FeatureDistance::Chebyshev => 3,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.code() == code)
    }

    pub fn distance(self, x: &[f64], w: &[f64]) -> Result<f64> {
        if x.len() != w.len() {
            return Err(SomError::Shape {
                expected: x.len(),
                actual: w.len(),
            });
        }
        if x.is_empty() {
            return Err(SomError::Shape { expected: 1, actual: 0 });
        }
        if self == FeatureDistance::Cosine && (is_zero(x) || is_zero(w)) {
            return Err(SomError::Domain("cosine distance is undefined for a zero vector".into()));
        }
        Ok(self.distance_unchecked(x, w))
    }

    /// Lengths must match. A zero vector under cosine yields NaN.
    #[inline]
    pub(crate) fn distance_unchecked(self, x: &[f64], w: &[f64]) -> f64 {
        match self {
            FeatureDistance::Euclidean => x
                .iter()
                .zip(w)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            FeatureDistance::Manhattan => x.iter().zip(w).map(|(a, b)| (a - b).abs()).sum(),
            FeatureDistance::Chebyshev => x.iter().zip(w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
            FeatureDistance::Cosine => {
                let (mut dot, mut nx, mut nw) = (0.0, 0.0, 0.0);
                for (a, b) in x.iter().zip(w) {
                    dot += a * b;
                    nx += a * a;
                    nw += b * b;
                }
                (1.0 - dot / (nx.sqrt() * nw.sqrt())).clamp(0.0, 2.0)
            }
        }
    }
}

fn is_zero(v: &[f64]) -> bool {
    v.iter().all(|&a| a == 0.0)
}

impl fmt::Display for FeatureDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureDistance {
    type Err = SomError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cosine" => Ok(FeatureDistance::Cosine),
            "euclidean" => Ok(FeatureDistance::Euclidean),
            "manhattan" | "cityblock" => Ok(FeatureDistance::Manhattan),
            "chebyshev" => Ok(FeatureDistance::Chebyshev),
            other => Err(SomError::Parameter(format!("unknown distance '{other}'"))),
        }
    }
}

pub fn feature_distance(metric: FeatureDistance, x: &[f64], w: &[f64]) -> Result<f64> {
    metric.distance(x, w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleKind {
    Inverse,
    Linear,
}

impl ScheduleKind {
    pub fn name(self) -> &'static str {
        match self {
            ScheduleKind::Inverse => "inverse",
            ScheduleKind::Linear => "linear",
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScheduleKind {
    type Err = SomError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "inverse" => Ok(ScheduleKind::Inverse),
            "linear" => Ok(ScheduleKind::Linear),
            other => Err(SomError::Parameter(format!("unknown schedule '{other}'"))),
        }
    }
}

/// One point of a decay recurrence: the current value at step `t` of `total`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleState {
    pub value: f64,
    pub t: usize,
    pub total: usize,
    /// Inverse learning-rate decay rate.
    pub gamma: f64,
}

impl ScheduleState {
    pub fn new(value: f64, t: usize, total: usize) -> Self {
        Self {
            value,
            t,
            total,
            gamma: default_gamma(total),
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    fn check(&self) -> Result<()> {
        if self.t > self.total {
            return Err(SomError::Parameter(format!(
                "schedule step {} exceeds total {}",
                self.t, self.total
            )));
        }
        Ok(())
    }

    fn check_total(&self) -> Result<()> {
        if self.total == 0 {
            return Err(SomError::Parameter("schedule total must be >= 1".into()));
        }
        self.check()
    }
}

/// `T / 100`, the customary inverse-decay rate.
pub fn default_gamma(total: usize) -> f64 {
    total as f64 / 100.0
}

/// Learning rate at step `t + 1` given the rate at step `t`.
pub fn lr_step(kind: ScheduleKind, s: ScheduleState) -> Result<f64> {
    match kind {
        ScheduleKind::Inverse => {
            s.check()?;
            if !(s.gamma > 0.0) {
                return Err(SomError::Parameter(format!("gamma must be positive, got {}", s.gamma)));
            }
            Ok(s.value * s.gamma / (s.gamma + s.t as f64))
        }
        ScheduleKind::Linear => {
            s.check_total()?;
            Ok(s.value * (1.0 - s.t as f64 / s.total as f64))
        }
    }
}

/// Neighborhood width at step `t + 1` given the width at step `t`.
pub fn sigma_step(kind: ScheduleKind, s: ScheduleState) -> Result<f64> {
    s.check_total()?;
    let t = s.t as f64;
    let total = s.total as f64;
    Ok(match kind {
        ScheduleKind::Inverse => s.value / (1.0 + t * (s.value - 1.0) / total),
        ScheduleKind::Linear => s.value + t * (1.0 - s.value) / total,
    })
}

pub fn asymptotic_step(s: ScheduleState) -> Result<f64> {
    s.check_total()?;
    Ok(s.value / (1.0 + s.t as f64 / (s.total as f64 / 2.0)))
}

/// Replays a recurrence from `initial` at `t = 0`, returning the `total + 1`
/// values `v(0), ..., v(total)`.
pub fn replay<F>(initial: f64, total: usize, gamma: f64, mut step: F) -> Result<Vec<f64>>
where
    F: FnMut(ScheduleState) -> Result<f64>,
{
    let mut values = Vec::with_capacity(total + 1);
    let mut v = initial;
    values.push(v);
    for t in 0..total {
        v = step(ScheduleState {
            value: v,
            t,
            total,
            gamma,
        })?;
        values.push(v);
    }
    Ok(values)
}
