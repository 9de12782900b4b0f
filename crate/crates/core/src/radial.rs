use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples of a function of r on the uniform grid r_i = iΔr, i = 0..N,
/// with local cubic interpolation between nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialFunction {
    step: f64,
    values: Vec<f64>,
}

pub const MIN_RADIAL_POINTS: usize = 16;

impl RadialFunction {
    /// `values[i]` is the sample at r = i·radius/(values.len() - 1).
    pub fn new(radius: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < MIN_RADIAL_POINTS + 1 {
            return Err(Error::InvalidArgument(format!(
                "radial grid needs at least {} intervals, got {}",
                MIN_RADIAL_POINTS,
                values.len().saturating_sub(1)
            )));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "radial grid end must be positive, got {radius}"
            )));
        }
        Ok(Self {
            step: radius / (values.len() - 1) as f64,
            values,
        })
    }

    pub fn from_fn(radius: f64, intervals: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let step = radius / intervals as f64;
        Self::new(radius, (0..=intervals).map(|i| f(i as f64 * step)).collect())
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    pub fn radius(&self) -> f64 {
        self.step * self.intervals() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, v)| (i as f64 * self.step, *v))
    }

    /// Cubic Lagrange interpolation through the four nearest nodes. Outside
    /// [0, R] the end values are held.
    pub fn eval(&self, r: f64) -> f64 {
        let n = self.intervals();
        if r <= 0.0 {
            return self.values[0];
        }
        if r >= self.radius() {
            return self.values[n];
        }
        let x = r / self.step;
        let i = (x.floor() as usize).min(n - 1);
        let base = i.saturating_sub(1).min(n - 3);
        let t = x - base as f64;
        let v = &self.values[base..base + 4];
        // nodes at 0, 1, 2, 3
        let l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
        let l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
        let l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
        let l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
        l0 * v[0] + l1 * v[1] + l2 * v[2] + l3 * v[3]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Keeps every `factor`-th sample.
    pub fn subsample(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.intervals().is_multiple_of(factor) {
            return Err(Error::InvalidArgument(format!(
                "cannot subsample {} intervals by {factor}",
                self.intervals()
            )));
        }
        Self::new(self.radius(), self.values.iter().step_by(factor).copied().collect())
    }
}
