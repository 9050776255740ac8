//! Piecewise-linear curves on a uniform time grid.
//!
//! [`IntensityCurve`] holds a strictly positive function (trading intensity,
//! tick volatility, spot variance, sampling intensity) and
//! [`Accumulated`] holds a weakly increasing cumulative function used for
//! generalized-inverse sampling. All integrals use the trapezoid rule on
//! the nodes, which is exact for the piecewise-linear representation.

use crate::error::{Error, Result};

/// A strictly positive function on `[t0, t1]`, stored on `n >= 2` uniformly
/// spaced nodes and linearly interpolated in between.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityCurve {
    t0: f64,
    t1: f64,
    values: Vec<f64>,
}

impl IntensityCurve {
    pub fn new(t0: f64, t1: f64, values: Vec<f64>) -> Result<Self> {
        check_grid(t0, t1, values.len())?;
        if let Some((k, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::InvalidCurve(format!(
                "value at node {k} is {v}; intensity curves must be strictly positive"
            )));
        }
        Ok(Self { t0, t1, values })
    }

    pub fn constant(t0: f64, t1: f64, n: usize, value: f64) -> Result<Self> {
        Self::new(t0, t1, vec![value; n])
    }

    /// Samples `f` at the `n` grid nodes.
    pub fn from_fn(t0: f64, t1: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        check_grid(t0, t1, n)?;
        let dt = (t1 - t0) / (n - 1) as f64;
        let values = (0..n).map(|k| f(node_time(t0, t1, dt, n, k))).collect();
        Self::new(t0, t1, values)
    }

    /// Linear interpolation of arbitrary `(t, value)` points onto a uniform grid.
    /// Points must have strictly increasing times covering `[t0, t1]`.
    pub fn from_points(points: &[(f64, f64)], t0: f64, t1: f64, n: usize) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidCurve("need at least two curve points".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidCurve("curve times must be strictly increasing".into()));
        }
        let (first, last) = (points[0].0, points[points.len() - 1].0);
        if first > t0 + 1e-9 * (t1 - t0) || last < t1 - 1e-9 * (t1 - t0) {
            return Err(Error::InvalidCurve(format!(
                "curve points cover [{first}, {last}] but [{t0}, {t1}] is required"
            )));
        }
        Self::from_fn(t0, t1, n, |t| {
            let idx = points.partition_point(|p| p.0 <= t);
            if idx == 0 {
                points[0].1
            } else if idx == points.len() {
                points[points.len() - 1].1
            } else {
                let (a, b) = (points[idx - 1], points[idx]);
                a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
            }
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / (self.values.len() - 1) as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Time of node `k`; the last node is exactly `t1`.
    pub fn time(&self, k: usize) -> f64 {
        node_time(self.t0, self.t1, self.dt(), self.len(), k)
    }

    /// Linear interpolation, clamped to the end values outside `[t0, t1]`.
    pub fn value_at(&self, t: f64) -> f64 {
        interpolate(self.t0, self.t1, &self.values, t)
    }

    /// Trapezoid integral over the whole domain.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.dt())
    }

    /// Trapezoid time-average of the node values.
    pub fn mean(&self) -> f64 {
        trapezoid_mean(&self.values)
    }

    pub fn same_grid(&self, other: &IntensityCurve) -> bool {
        self.len() == other.len() && self.t0 == other.t0 && self.t1 == other.t1
    }

    /// Node-wise combination of two curves on the same grid.
    pub fn zip_with(
        &self,
        other: &IntensityCurve,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<IntensityCurve> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        IntensityCurve::new(self.t0, self.t1, values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<IntensityCurve> {
        IntensityCurve::new(self.t0, self.t1, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, factor: f64) -> Result<IntensityCurve> {
        self.map(|v| v * factor)
    }

    /// Re-samples the curve onto a new uniform grid by linear interpolation.
    pub fn resample(&self, t0: f64, t1: f64, n: usize) -> Result<IntensityCurve> {
        IntensityCurve::from_fn(t0, t1, n, |t| self.value_at(t))
    }

    /// The same node values on `[0, 1]`.
    pub fn rescaled_to_unit(&self) -> IntensityCurve {
        IntensityCurve {
            t0: 0.0,
            t1: 1.0,
            values: self.values.clone(),
        }
    }

    /// Trapezoid cumulative integral `∫_{t0}^{t_k}` at each node.
    pub fn cumulative(&self) -> Accumulated {
        Accumulated {
            t0: self.t0,
            t1: self.t1,
            values: cumulative_trapezoid(&self.values, self.dt()),
        }
    }
}

/// A weakly increasing piecewise-linear function on a uniform grid, starting
/// at zero. Its generalized inverse drives every sampling scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct Accumulated {
    t0: f64,
    t1: f64,
    values: Vec<f64>,
}

impl Accumulated {
    pub fn new(t0: f64, t1: f64, values: Vec<f64>) -> Result<Self> {
        check_grid(t0, t1, values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCurve("accumulated values must be finite".into()));
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidCurve(format!(
                "accumulated curve must start at 0, got {}",
                values[0]
            )));
        }
        if let Some(k) = values.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::NonMonotone(format!(
                "accumulated curve decreases between nodes {k} and {}",
                k + 1
            )));
        }
        Ok(Self { t0, t1, values })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / (self.values.len() - 1) as f64
    }

    pub fn value_at(&self, t: f64) -> f64 {
        interpolate(self.t0, self.t1, &self.values, t)
    }

    /// Rescales so the terminal value equals `target`.
    pub fn normalized_to(&self, target: f64) -> Result<Accumulated> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::InvalidCurve(
                "cannot normalize an accumulated curve with zero total".into(),
            ));
        }
        let scale = target / total;
        let mut values: Vec<f64> = self.values.iter().map(|v| v * scale).collect();
        let n = values.len();
        values[n - 1] = target;
        Ok(Accumulated {
            t0: self.t0,
            t1: self.t1,
            values,
        })
    }

    /// Generalized inverse `inf{t : Φ(t) >= level}`. Levels at or below
    /// `Φ(t0)` map to `t0`; levels above the total map to `t1`.
    pub fn inverse(&self, level: f64) -> f64 {
        let k = self.values.partition_point(|&v| v < level);
        if k == 0 {
            return self.t0;
        }
        if k == self.values.len() {
            return self.t1;
        }
        let n = self.values.len();
        let dt = self.dt();
        let (lo, hi) = (self.values[k - 1], self.values[k]);
        let left = node_time(self.t0, self.t1, dt, n, k - 1);
        let right = node_time(self.t0, self.t1, dt, n, k);
        let t = left + (level - lo) / (hi - lo) * dt;
        t.min(right)
    }
}

fn check_grid(t0: f64, t1: f64, n: usize) -> Result<()> {
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(Error::InvalidCurve(format!(
            "curve domain [{t0}, {t1}] must satisfy t1 > t0"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidCurve(format!(
            "curve needs at least 2 grid points, got {n}"
        )));
    }
    Ok(())
}

fn node_time(t0: f64, t1: f64, dt: f64, n: usize, k: usize) -> f64 {
    if k + 1 == n {
        t1
    } else {
        t0 + k as f64 * dt
    }
}

fn interpolate(t0: f64, t1: f64, values: &[f64], t: f64) -> f64 {
    let n = values.len();
    if t <= t0 {
        return values[0];
    }
    if t >= t1 {
        return values[n - 1];
    }
    let x = (t - t0) / (t1 - t0) * (n - 1) as f64;
    let k = (x.floor() as usize).min(n - 2);
    let w = x - k as f64;
    values[k] + w * (values[k + 1] - values[k])
}

pub(crate) fn trapezoid(values: &[f64], dt: f64) -> f64 {
    let n = values.len();
    let interior: f64 = values[1..n - 1].iter().sum();
    dt * (interior + 0.5 * (values[0] + values[n - 1]))
}

/// `trapezoid(values, dt) / (t1 - t0)` without the grid spacing.
pub(crate) fn trapezoid_mean(values: &[f64]) -> f64 {
    let n = values.len();
    let interior: f64 = values[1..n - 1].iter().sum();
    (interior + 0.5 * (values[0] + values[n - 1])) / (n - 1) as f64
}

pub(crate) fn cumulative_trapezoid(values: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * dt * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive_values() {
        assert!(IntensityCurve::new(0.0, 1.0, vec![1.0, 0.0, 1.0]).is_err());
        assert!(IntensityCurve::new(0.0, 1.0, vec![1.0]).is_err());
        assert!(IntensityCurve::new(1.0, 1.0, vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn interpolation_and_integral() {
        let c = IntensityCurve::from_fn(0.0, 2.0, 3, |t| 1.0 + t).unwrap();
        assert_eq!(c.value_at(0.5), 1.5);
        assert_eq!(c.value_at(-1.0), 1.0);
        assert_eq!(c.value_at(5.0), 3.0);
        assert!((c.integral() - 4.0).abs() < 1e-15);
        assert!((c.mean() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn constant_mean() {
        let c = IntensityCurve::constant(0.0, 23400.0, 23401, 0.37).unwrap();
        assert!((c.mean() - 0.37).abs() < 1e-12);
    }

    #[test]
    fn inverse_of_identity() {
        let phi = Accumulated::new(0.0, 1.0, vec![0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        assert_eq!(phi.inverse(0.0), 0.0);
        assert!((phi.inverse(0.3) - 0.3).abs() < 1e-15);
        assert_eq!(phi.inverse(1.0), 1.0);
        assert_eq!(phi.inverse(2.0), 1.0);
    }

    #[test]
    fn inverse_flat_region_takes_infimum() {
        let phi = Accumulated::new(0.0, 1.0, vec![0.0, 0.25, 0.5, 0.5, 1.0]).unwrap();
        assert_eq!(phi.inverse(0.5), 0.5);
    }

    #[test]
    fn accumulated_rejects_decrease() {
        assert!(matches!(
            Accumulated::new(0.0, 1.0, vec![0.0, 0.6, 0.5]),
            Err(Error::NonMonotone(_))
        ));
    }
}
