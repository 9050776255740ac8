//! Kernel estimates of the trading intensity and the tick variance.
//!
//! Both estimators reflect every tick about the day's boundaries before
//! smoothing, which removes most of the boundary bias of a plain kernel sum.

use std::collections::VecDeque;

use crate::curve::IntensityCurve;
use crate::error::{Error, Result};
use crate::sim::TickSeries;

/// Smallest value an estimated curve may take.
pub const CURVE_FLOOR: f64 = 1e-12;

/// Gaussian kernels are truncated at this many bandwidths.
const GAUSSIAN_CUTOFF: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Gaussian,
    Epanechnikov,
}

impl KernelKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(KernelKind::Gaussian),
            "epanechnikov" => Ok(KernelKind::Epanechnikov),
            other => Err(Error::Config(format!("unknown kernel '{other}'"))),
        }
    }

    /// Density of the unit-bandwidth kernel.
    fn density(self, u: f64) -> f64 {
        match self {
            KernelKind::Gaussian => (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            KernelKind::Epanechnikov => {
                if u.abs() < 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }

    fn support(self) -> f64 {
        match self {
            KernelKind::Gaussian => GAUSSIAN_CUTOFF,
            KernelKind::Epanechnikov => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kernel: KernelKind,
    /// Bandwidth in seconds.
    pub bandwidth: f64,
    pub mirror: bool,
    /// Nodes of the output curve on `[0, T]`.
    pub grid_points: usize,
    /// Subtract twice an estimate of the noise variance from squared increments.
    pub noise_adjust: bool,
}

impl KernelSpec {
    /// Gaussian kernel with bandwidth `T/50` on a one-minute output grid.
    pub fn default_for(day_length: f64) -> Self {
        Self {
            kernel: KernelKind::Gaussian,
            bandwidth: day_length / 50.0,
            mirror: true,
            grid_points: (day_length / 60.0).round().max(1.0) as usize + 1,
            noise_adjust: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth
            )));
        }
        if self.grid_points < 2 {
            return Err(Error::InvalidArgument("estimation grid needs at least 2 points".into()));
        }
        Ok(())
    }
}

/// Adds `w K_h(t_k − x)` to every node `t_k` within the kernel support,
/// including the mirror images of `x` about both boundaries.
fn smooth(positions: &[f64], weights: &[f64], day_length: f64, spec: &KernelSpec) -> Vec<f64> {
    let n = spec.grid_points;
    let dt = day_length / (n - 1) as f64;
    let h = spec.bandwidth;
    let reach = spec.kernel.support() * h;
    let mut out = vec![0.0; n];
    let scale = 1.0 / h;
    let mut add = |x: f64, w: f64| {
        let lo = ((x - reach) / dt).ceil().max(0.0);
        let hi = ((x + reach) / dt).floor().min((n - 1) as f64);
        if hi < lo {
            return;
        }
        let (lo, hi) = (lo as usize, hi as usize);
        match spec.kernel {
            KernelKind::Gaussian => {
                // exp(-u²/2) along equally spaced u by a multiplicative recurrence.
                let a = dt / h;
                let u0 = (lo as f64 * dt - x) / h;
                let mut g = w * scale * KernelKind::Gaussian.density(u0);
                let mut ratio = (-a * u0 - 0.5 * a * a).exp();
                let step = (-a * a).exp();
                for v in &mut out[lo..=hi] {
                    *v += g;
                    g *= ratio;
                    ratio *= step;
                }
            }
            KernelKind::Epanechnikov => {
                for (k, v) in out.iter_mut().enumerate().take(hi + 1).skip(lo) {
                    *v += w * scale * spec.kernel.density((k as f64 * dt - x) / h);
                }
            }
        }
    };
    for (&x, &w) in positions.iter().zip(weights) {
        add(x, w);
        if spec.mirror {
            add(-x, w);
            add(2.0 * day_length - x, w);
        }
    }
    out
}

fn floored_curve(values: Vec<f64>, day_length: f64) -> Result<IntensityCurve> {
    let values = values
        .into_iter()
        .map(|v| if v.is_finite() { v.max(CURVE_FLOOR) } else { CURVE_FLOOR })
        .collect();
    IntensityCurve::new(0.0, day_length, values)
}

/// `λ̂(t) = Σ_i K_h(t − t_i)` on `[0, T]`.
pub fn estimate_lambda(ticks: &TickSeries, spec: &KernelSpec) -> Result<IntensityCurve> {
    spec.validate()?;
    if ticks.is_empty() {
        return Err(Error::InsufficientTicks { have: 0, need: 1 });
    }
    let ones = vec![1.0; ticks.len()];
    let values = smooth(ticks.times(), &ones, ticks.day_length(), spec);
    floored_curve(values, ticks.day_length())
}

/// `-γ̂₁` of the tick increments, capped below at zero; the first-order
/// autocovariance of increments equals `-ω²` under i.i.d. noise.
pub fn noise_variance_estimate(ticks: &TickSeries) -> f64 {
    let d: Vec<f64> = ticks.log_prices().windows(2).map(|w| w[1] - w[0]).collect();
    if d.len() < 2 {
        return 0.0;
    }
    let gamma1 = d.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / d.len() as f64;
    (-gamma1).max(0.0)
}

/// Nadaraya–Watson smoother of squared tick increments `(P(t_i) − P(t_{i−1}))²`
/// placed at `t_i`.
pub fn estimate_varsigma2(ticks: &TickSeries, spec: &KernelSpec) -> Result<IntensityCurve> {
    spec.validate()?;
    if ticks.len() < 2 {
        return Err(Error::InsufficientTicks {
            have: ticks.len(),
            need: 2,
        });
    }
    let shift = if spec.noise_adjust {
        2.0 * noise_variance_estimate(ticks)
    } else {
        0.0
    };
    let squared: Vec<f64> = ticks
        .log_prices()
        .windows(2)
        .map(|w| (w[1] - w[0]).powi(2) - shift)
        .collect();
    let positions = &ticks.times()[1..];
    let ones = vec![1.0; positions.len()];
    let num = smooth(positions, &squared, ticks.day_length(), spec);
    let den = smooth(positions, &ones, ticks.day_length(), spec);
    let values = num
        .iter()
        .zip(&den)
        .map(|(n, d)| if *d > 0.0 { n / d } else { 0.0 })
        .collect();
    floored_curve(values, ticks.day_length())
}

/// Estimated curves of one day.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyCurves {
    pub lambda: IntensityCurve,
    pub varsigma2: IntensityCurve,
    /// `λ̂ ς̂²`.
    pub spot_variance: IntensityCurve,
}

pub fn estimate_daily_curves(ticks: &TickSeries, spec: &KernelSpec) -> Result<DailyCurves> {
    let lambda = estimate_lambda(ticks, spec)?;
    let varsigma2 = estimate_varsigma2(ticks, spec)?;
    let spot_variance = lambda.zip_with(&varsigma2, |l, s| (l * s).max(CURVE_FLOOR))?;
    Ok(DailyCurves {
        lambda,
        varsigma2,
        spot_variance,
    })
}

/// Pointwise mean of the last `window` curves (all of them if fewer).
pub fn rolling_average(curves: &[IntensityCurve], window: usize) -> Result<IntensityCurve> {
    if window == 0 {
        return Err(Error::InvalidArgument("rolling window must be at least 1".into()));
    }
    let recent = &curves[curves.len().saturating_sub(window)..];
    let first = recent
        .first()
        .ok_or_else(|| Error::InsufficientData("no curves to average".into()))?;
    let mut sum = vec![0.0; first.len()];
    for c in recent {
        if !c.same_grid(first) {
            return Err(Error::GridMismatch);
        }
        for (s, v) in sum.iter_mut().zip(c.values()) {
            *s += v;
        }
    }
    let k = recent.len() as f64;
    IntensityCurve::new(first.t0(), first.t1(), sum.into_iter().map(|s| s / k).collect())
}

/// Daily curve estimates over a trailing window of past days.
#[derive(Debug, Clone)]
pub struct RollingEstimate {
    window: usize,
    history: VecDeque<DailyCurves>,
}

impl RollingEstimate {
    pub fn new(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidArgument("rolling window must be at least 1".into()));
        }
        Ok(Self {
            window,
            history: VecDeque::with_capacity(window),
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn push(&mut self, day: DailyCurves) {
        if self.history.len() == self.window {
            self.history.pop_front();
        }
        self.history.push_back(day);
    }

    /// Averages of the stored days, or `None` before the first push.
    pub fn averaged(&self) -> Result<Option<DailyCurves>> {
        if self.history.is_empty() {
            return Ok(None);
        }
        let pick = |f: fn(&DailyCurves) -> &IntensityCurve| -> Result<IntensityCurve> {
            let curves: Vec<IntensityCurve> = self.history.iter().map(|d| f(d).clone()).collect();
            rolling_average(&curves, self.window)
        };
        Ok(Some(DailyCurves {
            lambda: pick(|d| &d.lambda)?,
            varsigma2: pick(|d| &d.varsigma2)?,
            spot_variance: pick(|d| &d.spot_variance)?,
        }))
    }
}
