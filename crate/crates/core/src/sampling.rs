//! Sampling grids and previous-tick resampling.
//!
//! Every grid starts at 0 and ends at the day length `T`. Intensity-based
//! grids place `τ_j` at the generalized inverse of an accumulated sampling
//! intensity; realized grids place `τ_j` on observed tick times.

use std::fmt;

use crate::curve::{Accumulated, IntensityCurve};
use crate::error::{Error, Result};
use crate::sim::TickSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeKind {
    Cts,
    Itts,
    Rtts,
    Ibts,
    Rbts,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 5] = [
        SchemeKind::Cts,
        SchemeKind::Itts,
        SchemeKind::Rtts,
        SchemeKind::Ibts,
        SchemeKind::Rbts,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            SchemeKind::Cts => "cts",
            SchemeKind::Itts => "itts",
            SchemeKind::Rtts => "rtts",
            SchemeKind::Ibts => "ibts",
            SchemeKind::Rbts => "rbts",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cts" => Ok(SchemeKind::Cts),
            "itts" => Ok(SchemeKind::Itts),
            "rtts" => Ok(SchemeKind::Rtts),
            "ibts" => Ok(SchemeKind::Ibts),
            "rbts" => Ok(SchemeKind::Rbts),
            other => Err(Error::Config(format!("unknown sampling scheme '{other}'"))),
        }
    }

    /// Realized schemes sample on observed ticks.
    pub fn is_realized(self) -> bool {
        matches!(self, SchemeKind::Rtts | SchemeKind::Rbts)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Sampling times `0 = τ_0 < τ_1 < … < τ_M = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingGrid {
    taus: Vec<f64>,
    scheme: SchemeKind,
    requested: usize,
    merged: usize,
}

impl SamplingGrid {
    /// Builds a grid from candidate times, merging coincident points.
    /// The first and last entries are forced to `0` and `T`.
    pub fn from_times(scheme: SchemeKind, mut taus: Vec<f64>, day_length: f64) -> Result<Self> {
        if taus.len() < 2 {
            return Err(Error::InvalidArgument("a grid needs at least two points".into()));
        }
        let requested = taus.len() - 1;
        let last = taus.len() - 1;
        taus[0] = 0.0;
        taus[last] = day_length;
        if let Some(i) = taus.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::NonMonotone(format!(
                "grid decreases at index {}: {} > {}",
                i + 1,
                taus[i],
                taus[i + 1]
            )));
        }
        taus.dedup();
        let merged = requested + 1 - taus.len();
        if taus.len() < 2 {
            return Err(Error::InvalidArgument("grid collapsed to a single point".into()));
        }
        Ok(Self {
            taus,
            scheme,
            requested,
            merged,
        })
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn scheme(&self) -> SchemeKind {
        self.scheme
    }

    /// Number of bins asked for.
    pub fn requested_m(&self) -> usize {
        self.requested
    }

    /// Number of bins after merging coincident grid points.
    pub fn m(&self) -> usize {
        self.taus.len() - 1
    }

    /// Count of grid points removed because they coincided with a neighbour.
    pub fn merged(&self) -> usize {
        self.merged
    }

    pub fn day_length(&self) -> f64 {
        self.taus[self.taus.len() - 1]
    }
}

/// `τ_j = inf{t : Φ(t) ≥ j Φ(T)/M}` for an accumulated sampling intensity.
pub fn grid_from_accumulated(scheme: SchemeKind, phi: &Accumulated, m: usize) -> Result<SamplingGrid> {
    check_m(m)?;
    if phi.t0() != 0.0 {
        return Err(Error::InvalidArgument(format!(
            "accumulated intensity must start at 0, got {}",
            phi.t0()
        )));
    }
    let total = phi.total();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("accumulated intensity has no mass".into()));
    }
    let mut taus = Vec::with_capacity(m + 1);
    taus.push(0.0);
    for j in 1..m {
        taus.push(phi.inverse(j as f64 * total / m as f64));
    }
    taus.push(phi.t1());
    SamplingGrid::from_times(scheme, taus, phi.t1())
}

pub fn cts_grid(day_length: f64, m: usize) -> Result<SamplingGrid> {
    check_m(m)?;
    if !(day_length > 0.0) {
        return Err(Error::InvalidArgument(format!("T must be positive, got {day_length}")));
    }
    let taus = (0..=m).map(|j| day_length * j as f64 / m as f64).collect();
    SamplingGrid::from_times(SchemeKind::Cts, taus, day_length)
}

/// Intensity transaction time: equidistant in `Λ(0, t)`.
pub fn itts_grid(lambda: &IntensityCurve, m: usize) -> Result<SamplingGrid> {
    grid_from_accumulated(SchemeKind::Itts, &lambda.cumulative(), m)
}

/// Intensity business time: equidistant in `IV(0, t)` for a spot variance curve `ς²λ`.
pub fn ibts_grid(spot_variance: &IntensityCurve, m: usize) -> Result<SamplingGrid> {
    grid_from_accumulated(SchemeKind::Ibts, &spot_variance.cumulative(), m)
}

/// Realized transaction time: `τ_j = t_{⌈jN/M⌉}`, so every bin holds
/// `⌊N/M⌋` or `⌈N/M⌉` ticks.
pub fn rtts_grid(ticks: &TickSeries, m: usize) -> Result<SamplingGrid> {
    check_m(m)?;
    let n = ticks.len();
    if n < m {
        return Err(Error::InsufficientTicks { have: n, need: m });
    }
    let times = ticks.times();
    let mut taus = Vec::with_capacity(m + 1);
    taus.push(0.0);
    for j in 1..m {
        let idx = (j * n).div_ceil(m);
        taus.push(times[idx - 1]);
    }
    taus.push(ticks.day_length());
    SamplingGrid::from_times(SchemeKind::Rtts, taus, ticks.day_length())
}

/// Realized business time: `τ_j` is the first tick at which the cumulative
/// tick variance reaches `j/M` of the day's total.
pub fn rbts_grid(ticks: &TickSeries, tick_variance: &[f64], m: usize) -> Result<SamplingGrid> {
    check_m(m)?;
    let n = ticks.len();
    if tick_variance.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: tick_variance.len(),
        });
    }
    if n < m {
        return Err(Error::InsufficientTicks { have: n, need: m });
    }
    if let Some(v) = tick_variance.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument(format!("tick variance must be positive, got {v}")));
    }
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = 0.0;
    for v in tick_variance {
        acc += v;
        cumulative.push(acc);
    }
    let total = acc;
    // Absorbs summation round-off so constant weights reproduce the rTTS grid.
    let tol = 1e-10 * total;
    let times = ticks.times();
    let mut taus = Vec::with_capacity(m + 1);
    taus.push(0.0);
    for j in 1..m {
        let target = j as f64 * total / m as f64 - tol;
        let idx = cumulative.partition_point(|&c| c < target).min(n - 1);
        taus.push(times[idx]);
    }
    taus.push(ticks.day_length());
    SamplingGrid::from_times(SchemeKind::Rbts, taus, ticks.day_length())
}

/// Inputs that determine a grid.
#[derive(Debug, Clone, Copy)]
pub enum Scheme<'a> {
    Cts,
    Itts { lambda: &'a IntensityCurve },
    Rtts,
    Ibts { spot_variance: &'a IntensityCurve },
    Rbts { tick_variance: &'a [f64] },
}

impl Scheme<'_> {
    pub fn kind(&self) -> SchemeKind {
        match self {
            Scheme::Cts => SchemeKind::Cts,
            Scheme::Itts { .. } => SchemeKind::Itts,
            Scheme::Rtts => SchemeKind::Rtts,
            Scheme::Ibts { .. } => SchemeKind::Ibts,
            Scheme::Rbts { .. } => SchemeKind::Rbts,
        }
    }

    pub fn grid(&self, ticks: &TickSeries, m: usize) -> Result<SamplingGrid> {
        match *self {
            Scheme::Cts => cts_grid(ticks.day_length(), m),
            Scheme::Itts { lambda } => {
                check_span(lambda, ticks.day_length())?;
                itts_grid(lambda, m)
            }
            Scheme::Rtts => rtts_grid(ticks, m),
            Scheme::Ibts { spot_variance } => {
                check_span(spot_variance, ticks.day_length())?;
                ibts_grid(spot_variance, m)
            }
            Scheme::Rbts { tick_variance } => rbts_grid(ticks, tick_variance, m),
        }
    }
}

/// `ς²(t_i)` read off a tick-variance curve at every tick.
pub fn tick_variance_from_curve(ticks: &TickSeries, varsigma2: &IntensityCurve) -> Vec<f64> {
    ticks.times().iter().map(|&t| varsigma2.value_at(t)).collect()
}

/// Price of the last tick at or before each `τ_j`; the open level before
/// the first tick.
pub fn previous_tick_resample(ticks: &TickSeries, grid: &SamplingGrid) -> Vec<f64> {
    let times = ticks.times();
    let prices = ticks.log_prices();
    grid.taus()
        .iter()
        .map(|&tau| match times.partition_point(|&t| t <= tau) {
            0 => ticks.open_price(),
            k => prices[k - 1],
        })
        .collect()
}

/// `r_j = P(τ_j) − P(τ_{j−1})` from previous-tick prices.
pub fn returns_from_grid(ticks: &TickSeries, grid: &SamplingGrid) -> Vec<f64> {
    previous_tick_resample(ticks, grid)
        .windows(2)
        .map(|w| w[1] - w[0])
        .collect()
}

/// `Σ_{τ_{j−1} < t_i ≤ τ_j} w_i` for every bin.
pub fn bin_sums(ticks: &TickSeries, weights: &[f64], grid: &SamplingGrid) -> Result<Vec<f64>> {
    if weights.len() != ticks.len() {
        return Err(Error::LengthMismatch {
            expected: ticks.len(),
            got: weights.len(),
        });
    }
    let times = ticks.times();
    let mut out = vec![0.0; grid.m()];
    let mut i = times.partition_point(|&t| t <= 0.0);
    for (j, &tau) in grid.taus()[1..].iter().enumerate() {
        while i < times.len() && times[i] <= tau {
            out[j] += weights[i];
            i += 1;
        }
    }
    Ok(out)
}

/// Tick counts `N(τ_j) − N(τ_{j−1})`.
pub fn bin_counts(ticks: &TickSeries, grid: &SamplingGrid) -> Vec<usize> {
    let times = ticks.times();
    let mut prev = times.partition_point(|&t| t <= 0.0);
    grid.taus()[1..]
        .iter()
        .map(|&tau| {
            let k = times.partition_point(|&t| t <= tau);
            let c = k - prev;
            prev = k;
            c
        })
        .collect()
}

/// `∫_{τ_{j−1}}^{τ_j} c(t) dt` for every bin.
pub fn bin_integrals(curve: &IntensityCurve, grid: &SamplingGrid) -> Vec<f64> {
    let cum = curve.cumulative();
    grid.taus()
        .windows(2)
        .map(|w| cum.value_at(w[1]) - cum.value_at(w[0]))
        .collect()
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidArgument("M must be at least 1".into()));
    }
    Ok(())
}

fn check_span(curve: &IntensityCurve, day_length: f64) -> Result<()> {
    let tol = 1e-9 * day_length;
    if curve.t0().abs() > tol || (curve.t1() - day_length).abs() > tol {
        return Err(Error::InvalidArgument(format!(
            "curve spans [{}, {}] but the day is [0, {day_length}]",
            curve.t0(),
            curve.t1()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ticks(times: &[f64], t: f64) -> TickSeries {
        let prices = (1..=times.len()).map(|i| i as f64).collect();
        TickSeries::new(times.to_vec(), prices, t).unwrap()
    }

    #[test]
    fn identity_accumulator_is_cts() {
        let phi = Accumulated::new(0.0, 1.0, vec![0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        let g = grid_from_accumulated(SchemeKind::Itts, &phi, 4).unwrap();
        assert_eq!(g.taus(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn quadratic_accumulator_inverse() {
        let lambda = IntensityCurve::from_fn(0.0, 1.0, 20_001, |t| 2.0 * t + 1e-12).unwrap();
        let g = itts_grid(&lambda, 2).unwrap();
        assert!((g.taus()[1] - 0.5f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn flat_accumulator_takes_infimum() {
        let phi = Accumulated::new(0.0, 1.0, vec![0.0, 0.25, 0.5, 0.5, 0.75, 1.0]).unwrap();
        let g = grid_from_accumulated(SchemeKind::Ibts, &phi, 2).unwrap();
        assert!((g.taus()[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn cts_five_minute_grid() {
        let g = cts_grid(23_400.0, 78).unwrap();
        for (j, tau) in g.taus().iter().enumerate() {
            assert_eq!(*tau, 300.0 * j as f64);
        }
    }

    #[test]
    fn constant_lambda_itts_is_cts() {
        let lambda = IntensityCurve::constant(0.0, 23_400.0, 391, 0.3).unwrap();
        let a = itts_grid(&lambda, 78).unwrap();
        let b = cts_grid(23_400.0, 78).unwrap();
        for (x, y) in a.taus().iter().zip(b.taus()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn rtts_divisible() {
        let tk = ticks(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 10.0);
        assert_eq!(rtts_grid(&tk, 3).unwrap().taus(), &[0.0, 2.0, 4.0, 10.0]);
    }

    #[test]
    fn rtts_balanced_bins() {
        let tk = ticks(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0], 10.0);
        let g = rtts_grid(&tk, 3).unwrap();
        assert_eq!(bin_counts(&tk, &g), vec![3, 2, 2]);
    }

    #[test]
    fn rtts_every_tick_is_boundary() {
        let tk = ticks(&[1.0, 2.0, 3.0], 3.0);
        let g = rtts_grid(&tk, 3).unwrap();
        assert_eq!(g.taus(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(g.merged(), 0);
    }

    #[test]
    fn rtts_needs_enough_ticks() {
        let tk = ticks(&[1.0], 3.0);
        assert!(matches!(rtts_grid(&tk, 2), Err(Error::InsufficientTicks { have: 1, need: 2 })));
    }

    #[test]
    fn rbts_hand_example() {
        let tk = ticks(&[1.0, 2.0, 3.0, 4.0], 5.0);
        let g = rbts_grid(&tk, &[1.0, 3.0, 1.0, 3.0], 2).unwrap();
        assert_eq!(g.taus(), &[0.0, 2.0, 5.0]);
    }

    #[test]
    fn rbts_constant_weights_equal_rtts() {
        let times: Vec<f64> = (1..=997).map(|i| i as f64 * 0.1).collect();
        let tk = ticks(&times, 100.0);
        let w = vec![1.7e-4; times.len()];
        for m in [1, 2, 3, 13, 78, 390, 997] {
            assert_eq!(rbts_grid(&tk, &w, m).unwrap(), SamplingGrid {
                scheme: SchemeKind::Rbts,
                ..rtts_grid(&tk, m).unwrap()
            });
        }
    }

    #[test]
    fn last_tick_at_day_end_is_merged() {
        let tk = ticks(&[1.0, 2.0], 2.0);
        let g = rtts_grid(&tk, 2).unwrap();
        assert_eq!(g.taus(), &[0.0, 1.0, 2.0]);
        let g = rbts_grid(&tk, &[1.0, 100.0], 2).unwrap();
        assert_eq!(g.taus(), &[0.0, 2.0]);
        assert_eq!((g.m(), g.requested_m(), g.merged()), (1, 2, 1));
    }

    #[test]
    fn previous_tick_rules() {
        let tk = ticks(&[1.0, 2.0, 3.0, 4.0], 5.0).with_open_price(0.5);
        let g = SamplingGrid::from_times(SchemeKind::Cts, vec![0.0, 0.5, 2.0, 3.5, 5.0], 5.0).unwrap();
        assert_eq!(previous_tick_resample(&tk, &g), vec![0.5, 0.5, 2.0, 3.0, 4.0]);
        let r = returns_from_grid(&tk, &g);
        assert_eq!(r, vec![0.0, 1.5, 1.0, 1.0]);
        assert_eq!(r.iter().sum::<f64>(), tk.close_price() - tk.open_price());
    }

    #[test]
    fn single_bin_is_daily_return() {
        let tk = ticks(&[1.0, 2.0], 5.0);
        let g = cts_grid(5.0, 1).unwrap();
        assert_eq!(returns_from_grid(&tk, &g), vec![2.0]);
    }

    #[test]
    fn bin_sums_and_integrals() {
        let tk = ticks(&[1.0, 2.0, 3.0, 4.0], 4.0);
        let g = cts_grid(4.0, 2).unwrap();
        assert_eq!(bin_sums(&tk, &[1.0, 2.0, 3.0, 4.0], &g).unwrap(), vec![3.0, 7.0]);
        let c = IntensityCurve::constant(0.0, 4.0, 5, 2.0).unwrap();
        assert_eq!(bin_integrals(&c, &g), vec![4.0, 4.0]);
    }

    #[test]
    fn zero_m_rejected() {
        assert!(cts_grid(1.0, 0).is_err());
    }
}
