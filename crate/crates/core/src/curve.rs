//! Complementary-CDF curves sampled on a time grid.

use crate::error::{Error, Result};

/// A complementary CDF `t -> P(X > t)` evaluated on a strictly increasing
/// grid. Values lie in `[0, 1]` and never increase along the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TailCurve {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TailCurve {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidCurve(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::InvalidCurve("empty grid".into()));
        }
        if let Some(t) = times.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidCurve(format!("non-finite time {t}")));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidCurve(format!(
                "grid not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidCurve(format!("value {v} outside [0, 1]")));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::InvalidCurve(format!(
                "values increase at t = {}: {} -> {}",
                times[i + 1],
                values[i],
                values[i + 1]
            )));
        }
        Ok(Self { times, values })
    }

    /// Samples `f` on the grid `times`.
    pub fn from_fn(times: Vec<f64>, f: impl FnMut(f64) -> Result<f64>) -> Result<Self> {
        let values = times.iter().copied().map(f).collect::<Result<Vec<_>>>()?;
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Linear interpolation between grid points, held constant outside the grid.
    pub fn at(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&x| x <= t);
        if i == 0 {
            return self.values[0];
        }
        if i == self.times.len() {
            return self.values[i - 1];
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Applies `f` to every value, keeping the grid.
    pub fn map(&self, f: impl FnMut(f64) -> Result<f64>) -> Result<Self> {
        let values = self.values.iter().copied().map(f).collect::<Result<Vec<_>>>()?;
        Self::new(self.times.clone(), values)
    }
}

/// Evenly spaced grid `0, step, 2 step, ...` up to and including `t_max`
/// (up to rounding of the last point).
pub fn uniform_grid(t_max: f64, step: f64) -> Vec<f64> {
    let count = (t_max / step).round() as usize;
    (0..=count).map(|i| i as f64 * step).collect()
}
