//! Simulation of tick-time stochastic volatility days.
//!
//! A day is built in four steps: Ornstein–Uhlenbeck paths give the
//! day-specific multiplicative shocks of the trading intensity and the tick
//! volatility, a doubly stochastic Poisson process draws the tick arrivals,
//! Gaussian tick innovations scaled by the tick volatility give the
//! log-prices, and an optional noise process contaminates the observations.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::curve::{trapezoid, trapezoid_mean, IntensityCurve};
use crate::error::{Error, Result};
use crate::rng::{day_stream, DayStream};

/// Trading seconds in an NYSE session (6.5 hours).
pub const TRADING_DAY_SECONDS: f64 = 23_400.0;

/// Euler grid of one node per second over the trading day.
pub const DEFAULT_N_GRID: usize = 23_401;

/// Noise level of the i.i.d. and diurnal ARMA settings.
pub const DEFAULT_NOISE_VARIANCE: f64 = 1.2e-4;

const LAMBDA_DET_CSV: &str = include_str!("../data/lambda_det.csv");
const VARSIGMA_DET_CSV: &str = include_str!("../data/varsigma_det.csv");

// ---------------------------------------------------------------------------
// Ornstein–Uhlenbeck factors
// ---------------------------------------------------------------------------

/// Discretized OU factor `x_{k+1} = x_k - κ x_k + ε_k` together with the
/// scale used inside the exponential multiplier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuSpec {
    pub mean_reversion: f64,
    pub innovation_sd: f64,
    pub exp_scale: f64,
}

impl OuSpec {
    pub fn new(mean_reversion: f64, innovation_sd: f64, exp_scale: f64) -> Result<Self> {
        let spec = Self {
            mean_reversion,
            innovation_sd,
            exp_scale,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Trading-intensity factor: κ = 0.0002, unit innovations, scale 0.01.
    pub fn lambda_default() -> Self {
        Self {
            mean_reversion: 0.0002,
            innovation_sd: 1.0,
            exp_scale: 0.01,
        }
    }

    /// Tick-volatility factor: κ = 0.0002, unit innovations, scale 0.005.
    pub fn varsigma_default() -> Self {
        Self {
            mean_reversion: 0.0002,
            innovation_sd: 1.0,
            exp_scale: 0.005,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean_reversion > 0.0 && self.mean_reversion < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "OU mean_reversion must lie in (0, 1), got {}",
                self.mean_reversion
            )));
        }
        if !(self.innovation_sd >= 0.0 && self.innovation_sd.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "OU innovation_sd must be non-negative, got {}",
                self.innovation_sd
            )));
        }
        if !(self.exp_scale > 0.0 && self.exp_scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "OU exp_scale must be positive, got {}",
                self.exp_scale
            )));
        }
        Ok(())
    }
}

/// An OU path on the Euler grid and the innovations that produced it;
/// `innovations[k]` moves the path from node `k` to node `k + 1`.
#[derive(Debug, Clone)]
pub struct OuPath {
    pub values: Vec<f64>,
    pub innovations: Vec<f64>,
}

/// Deterministic Euler recursion; returns `innovations.len() + 1` values.
pub fn ou_recursion(mean_reversion: f64, x0: f64, innovations: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(innovations.len() + 1);
    let mut x = x0;
    out.push(x);
    for &eps in innovations {
        x = x - mean_reversion * x + eps;
        out.push(x);
    }
    out
}

/// Simulates `n_steps` Euler steps from `x_0 = 0`.
pub fn simulate_ou<R: Rng + ?Sized>(spec: &OuSpec, n_steps: usize, rng: &mut R) -> Result<OuPath> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
    }
    let innovations: Vec<f64> = (0..n_steps)
        .map(|_| spec.innovation_sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let values = ou_recursion(spec.mean_reversion, 0.0, &innovations);
    Ok(OuPath {
        values,
        innovations,
    })
}

/// `det(t_k) · exp(s·x_k) / b̄` where `b̄` is the time-average of
/// `exp(s·x_k)` over the day, so the multiplier has unit mean.
pub fn build_intensity(det: &IntensityCurve, ou_path: &[f64], exp_scale: f64) -> Result<IntensityCurve> {
    if ou_path.len() != det.len() {
        return Err(Error::LengthMismatch {
            expected: det.len(),
            got: ou_path.len(),
        });
    }
    let raw: Vec<f64> = ou_path.iter().map(|&x| (exp_scale * x).exp()).collect();
    let mean = trapezoid_mean(&raw);
    let values = det
        .values()
        .iter()
        .zip(&raw)
        .map(|(&d, &m)| d * (m / mean))
        .collect();
    IntensityCurve::new(det.t0(), det.t1(), values)
}

// ---------------------------------------------------------------------------
// Arrivals and prices
// ---------------------------------------------------------------------------

/// Draws `N(T) ~ Poisson(Λ(T))` and then `N(T)` i.i.d. arrival times from
/// `Λ(t)/Λ(T)` by inverting the piecewise-linear cumulative intensity.
pub fn simulate_arrivals<R: Rng + ?Sized>(lambda: &IntensityCurve, rng: &mut R) -> Result<Vec<f64>> {
    let cumulative = lambda.cumulative();
    let total = cumulative.total();
    let poisson = Poisson::new(total)
        .map_err(|e| Error::InvalidArgument(format!("Poisson mean {total}: {e}")))?;
    let n = poisson.sample(rng) as usize;
    let mut times: Vec<f64> = (0..n)
        .map(|_| cumulative.inverse(rng.random::<f64>() * total))
        .collect();
    times.sort_unstable_by(f64::total_cmp);
    // Coincident draws are a floating-point artefact; keep times strictly increasing.
    for i in 1..times.len() {
        if times[i] <= times[i - 1] {
            times[i] = times[i - 1].next_up();
        }
    }
    Ok(times)
}

/// Observed tick data of one day.
#[derive(Debug, Clone, PartialEq)]
pub struct TickSeries {
    times: Vec<f64>,
    log_prices: Vec<f64>,
    true_varsigma: Option<Vec<f64>>,
    day_length: f64,
    open_price: f64,
}

impl TickSeries {
    pub fn new(times: Vec<f64>, log_prices: Vec<f64>, day_length: f64) -> Result<Self> {
        if !(day_length > 0.0 && day_length.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "day length must be positive, got {day_length}"
            )));
        }
        if times.len() != log_prices.len() {
            return Err(Error::LengthMismatch {
                expected: times.len(),
                got: log_prices.len(),
            });
        }
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::UnsortedArrivals(i + 1));
        }
        if let (Some(&first), Some(&last)) = (times.first(), times.last()) {
            if first < 0.0 || last > day_length {
                return Err(Error::InvalidArgument(format!(
                    "tick times must lie in [0, {day_length}], got [{first}, {last}]"
                )));
            }
        }
        Ok(Self {
            times,
            log_prices,
            true_varsigma: None,
            day_length,
            open_price: 0.0,
        })
    }

    pub fn with_true_varsigma(mut self, varsigma: Vec<f64>) -> Result<Self> {
        if varsigma.len() != self.times.len() {
            return Err(Error::LengthMismatch {
                expected: self.times.len(),
                got: varsigma.len(),
            });
        }
        self.true_varsigma = Some(varsigma);
        Ok(self)
    }

    /// Level used by previous-tick resampling before the first tick.
    pub fn with_open_price(mut self, open_price: f64) -> Self {
        self.open_price = open_price;
        self
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn log_prices(&self) -> &[f64] {
        &self.log_prices
    }

    pub fn true_varsigma(&self) -> Option<&[f64]> {
        self.true_varsigma.as_deref()
    }

    pub fn day_length(&self) -> f64 {
        self.day_length
    }

    pub fn open_price(&self) -> f64 {
        self.open_price
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Last observed price at or before `T`, or the open level without ticks.
    pub fn close_price(&self) -> f64 {
        self.log_prices.last().copied().unwrap_or(self.open_price)
    }

    /// `ς²(t_i)` of every tick when the true tick volatility is known.
    pub fn true_tick_variance(&self) -> Option<Vec<f64>> {
        self.true_varsigma
            .as_ref()
            .map(|v| v.iter().map(|s| s * s).collect())
    }

    /// Realized integrated variance `Σ ς²(t_i)`.
    pub fn riv(&self) -> Option<f64> {
        self.true_varsigma
            .as_ref()
            .map(|v| v.iter().map(|s| s * s).sum())
    }
}

/// Correlation between tick innovations and the tick-volatility factor.
#[derive(Debug, Clone, Copy)]
pub struct Leverage<'a> {
    pub rho: f64,
    /// Innovations of the tick-volatility OU factor on the curve grid.
    pub innovations: &'a [f64],
    pub innovation_sd: f64,
}

/// `P(t_i) = P(t_{i-1}) + ς(t_i) U_i` with `ς(t_i)` interpolated linearly.
///
/// With leverage, `U_i = ρ Z_i + sqrt(1 - ρ²) ξ_i`, where `Z_i` is the
/// standardized sum of the factor innovations whose Euler steps end in
/// `(t_{i-1}, t_i]`. Ticks whose interval contains no step end get `U_i = ξ_i`.
pub fn simulate_prices<R: Rng + ?Sized>(
    arrivals: &[f64],
    varsigma: &IntensityCurve,
    leverage: Option<Leverage<'_>>,
    rng: &mut R,
) -> Result<TickSeries> {
    if let Some(i) = arrivals.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::UnsortedArrivals(i + 1));
    }
    let prefix = match leverage {
        Some(lev) => {
            if !(-1.0..=1.0).contains(&lev.rho) {
                return Err(Error::InvalidArgument(format!(
                    "leverage correlation must lie in [-1, 1], got {}",
                    lev.rho
                )));
            }
            if lev.innovations.len() + 1 != varsigma.len() {
                return Err(Error::LengthMismatch {
                    expected: varsigma.len() - 1,
                    got: lev.innovations.len(),
                });
            }
            let sd = if lev.innovation_sd > 0.0 { lev.innovation_sd } else { 1.0 };
            let mut prefix = Vec::with_capacity(lev.innovations.len() + 1);
            let mut acc = 0.0;
            prefix.push(0.0);
            for e in lev.innovations {
                acc += e / sd;
                prefix.push(acc);
            }
            Some((lev.rho, prefix))
        }
        None => None,
    };

    let (t0, dt, steps) = (varsigma.t0(), varsigma.dt(), varsigma.len() - 1);
    // Number of Euler steps ending at or before t.
    let steps_until = |t: f64| -> usize { (((t - t0) / dt).floor().max(0.0) as usize).min(steps) };

    let mut prices = Vec::with_capacity(arrivals.len());
    let mut vols = Vec::with_capacity(arrivals.len());
    let mut price = 0.0;
    let mut prev_steps = 0usize;
    for &t in arrivals {
        let xi: f64 = rng.sample(StandardNormal);
        let u = match &prefix {
            Some((rho, prefix)) => {
                let upto = steps_until(t);
                let count = upto.saturating_sub(prev_steps);
                let u = if count > 0 {
                    let z = (prefix[upto] - prefix[prev_steps]) / (count as f64).sqrt();
                    rho * z + (1.0 - rho * rho).sqrt() * xi
                } else {
                    xi
                };
                prev_steps = upto.max(prev_steps);
                u
            }
            None => xi,
        };
        let vol = varsigma.value_at(t);
        price += vol * u;
        prices.push(price);
        vols.push(vol);
    }
    TickSeries::new(arrivals.to_vec(), prices, varsigma.t1())?.with_true_varsigma(vols)
}

// ---------------------------------------------------------------------------
// Microstructure noise
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NoiseKind {
    None,
    IidGaussian,
    DiurnalArma,
}

impl NoiseKind {
    pub fn tag(self) -> &'static str {
        match self {
            NoiseKind::None => "none",
            NoiseKind::IidGaussian => "iid",
            NoiseKind::DiurnalArma => "diurnal_arma",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(NoiseKind::None),
            "iid" | "iid_gaussian" => Ok(NoiseKind::IidGaussian),
            "diurnal_arma" | "arma" => Ok(NoiseKind::DiurnalArma),
            other => Err(Error::Config(format!("unknown noise kind '{other}'"))),
        }
    }

    fn ordinal(self) -> u8 {
        match self {
            NoiseKind::None => 0,
            NoiseKind::IidGaussian => 1,
            NoiseKind::DiurnalArma => 2,
        }
    }
}

/// Observation noise `P̃(t_i) = P(t_i) + v_i`.
///
/// For the diurnal ARMA(1,1) kind, `v_i = ε_i + ar·v_{i-1} + ma·ε_{i-1}` with
/// `Var(ε_i)` proportional to a V-shaped multiplier that equals
/// `diurnal_ratio` at the open and close and 1 at midday; the scale is chosen
/// so the average of `Var(v_i)` over the day's ticks equals `variance`.
/// The fourth noise moment does not enter any estimator or error formula and
/// is not modelled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub variance: f64,
    pub ar: f64,
    pub ma: f64,
    pub diurnal_ratio: f64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            kind: NoiseKind::None,
            ..Self::iid(DEFAULT_NOISE_VARIANCE)
        }
    }

    pub fn iid(variance: f64) -> Self {
        Self {
            kind: NoiseKind::IidGaussian,
            variance,
            ar: 0.5,
            ma: 0.5,
            diurnal_ratio: 2.0,
        }
    }

    pub fn diurnal_arma(variance: f64) -> Self {
        Self {
            kind: NoiseKind::DiurnalArma,
            ..Self::iid(variance)
        }
    }

    pub fn of_kind(kind: NoiseKind, variance: f64) -> Self {
        Self {
            kind,
            ..Self::iid(variance)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance >= 0.0 && self.variance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be non-negative, got {}",
                self.variance
            )));
        }
        if self.ar.abs() >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "noise AR coefficient must satisfy |ar| < 1, got {}",
                self.ar
            )));
        }
        if !(self.diurnal_ratio > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "diurnal ratio must be positive, got {}",
                self.diurnal_ratio
            )));
        }
        Ok(())
    }

    /// V-shaped variance multiplier of the ARMA innovations.
    pub fn diurnal_multiplier(&self, t: f64, day_length: f64) -> f64 {
        1.0 + (self.diurnal_ratio - 1.0) * (2.0 * t / day_length - 1.0).abs()
    }
}

pub fn contaminate<R: Rng + ?Sized>(ticks: &TickSeries, spec: &NoiseSpec, rng: &mut R) -> Result<TickSeries> {
    spec.validate()?;
    let (open_noise, noise) = match spec.kind {
        NoiseKind::None => return Ok(ticks.clone()),
        NoiseKind::IidGaussian => {
            let sd = spec.variance.sqrt();
            let open = sd * rng.sample::<f64, _>(StandardNormal);
            let v = (0..ticks.len())
                .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
                .collect::<Vec<_>>();
            (open, v)
        }
        NoiseKind::DiurnalArma => diurnal_arma_noise(ticks, spec, rng),
    };
    let prices = ticks
        .log_prices()
        .iter()
        .zip(&noise)
        .map(|(p, v)| p + v)
        .collect();
    let mut out = TickSeries::new(ticks.times().to_vec(), prices, ticks.day_length())?
        .with_open_price(ticks.open_price() + open_noise);
    out.true_varsigma = ticks.true_varsigma.clone();
    Ok(out)
}

fn diurnal_arma_noise<R: Rng + ?Sized>(ticks: &TickSeries, spec: &NoiseSpec, rng: &mut R) -> (f64, Vec<f64>) {
    let (a, b) = (spec.ar, spec.ma);
    let day = ticks.day_length();
    // Stationary Var(v)/Var(ε) of an ARMA(1,1) with constant innovation variance.
    let stationary = (1.0 + 2.0 * a * b + b * b) / (1.0 - a * a);
    let shape: Vec<f64> = ticks
        .times()
        .iter()
        .map(|&t| spec.diurnal_multiplier(t, day))
        .collect();
    let open_shape = spec.diurnal_multiplier(0.0, day);

    // Var(v_i) is linear in the innovation scale; evaluate it at unit scale.
    let mut var_prev = stationary * open_shape;
    let mut eps_var_prev = open_shape;
    let mut total = 0.0;
    for &m in &shape {
        let var = m + a * a * var_prev + (b * b + 2.0 * a * b) * eps_var_prev;
        total += var;
        var_prev = var;
        eps_var_prev = m;
    }
    let scale = if shape.is_empty() {
        spec.variance / (stationary * open_shape)
    } else {
        spec.variance * shape.len() as f64 / total
    };

    // Pre-open state drawn from the stationary law at the opening variance.
    let eps_sd0 = (scale * open_shape).sqrt();
    let mut eps_prev = eps_sd0 * rng.sample::<f64, _>(StandardNormal);
    let extra = (scale * open_shape * (stationary - 1.0)).max(0.0).sqrt();
    let mut v_prev = eps_prev + extra * rng.sample::<f64, _>(StandardNormal);
    let open = v_prev;

    let noise = shape
        .iter()
        .map(|&m| {
            let eps = (scale * m).sqrt() * rng.sample::<f64, _>(StandardNormal);
            let v = eps + a * v_prev + b * eps_prev;
            v_prev = v;
            eps_prev = eps;
            v
        })
        .collect();
    (open, noise)
}

// ---------------------------------------------------------------------------
// Full day
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub day_length: f64,
    pub n_grid: usize,
    pub lambda_det: IntensityCurve,
    pub varsigma_det: IntensityCurve,
    pub lambda_ou: OuSpec,
    pub varsigma_ou: OuSpec,
    pub leverage_rho: f64,
    pub noise: NoiseSpec,
}

impl Default for SimConfig {
    fn default() -> Self {
        let (lambda_det, varsigma_det) = default_curves(TRADING_DAY_SECONDS, DEFAULT_N_GRID)
            .expect("bundled curves are valid");
        Self {
            day_length: TRADING_DAY_SECONDS,
            n_grid: DEFAULT_N_GRID,
            lambda_det,
            varsigma_det,
            lambda_ou: OuSpec::lambda_default(),
            varsigma_ou: OuSpec::varsigma_default(),
            leverage_rho: 0.0,
            noise: NoiseSpec::none(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.day_length > 0.0) {
            return Err(Error::Config(format!("T must be positive, got {}", self.day_length)));
        }
        if self.n_grid < 2 {
            return Err(Error::Config(format!("n_grid must be at least 2, got {}", self.n_grid)));
        }
        for (name, c) in [("lambda_det", &self.lambda_det), ("varsigma_det", &self.varsigma_det)] {
            if c.t0() != 0.0 || c.t1() != self.day_length || c.len() != self.n_grid {
                return Err(Error::Config(format!(
                    "{name} must be defined on the Euler grid [0, T] with n_grid nodes"
                )));
            }
        }
        self.lambda_ou
            .validate()
            .map_err(|e| Error::Config(format!("lambda OU: {e}")))?;
        self.varsigma_ou
            .validate()
            .map_err(|e| Error::Config(format!("varsigma OU: {e}")))?;
        if !(-1.0..=1.0).contains(&self.leverage_rho) {
            return Err(Error::Config(format!(
                "leverage_rho must lie in [-1, 1], got {}",
                self.leverage_rho
            )));
        }
        self.noise
            .validate()
            .map_err(|e| Error::Config(format!("noise: {e}")))
    }

    /// Moves the deterministic curves onto the `[0, T]`, `n_grid` Euler grid.
    pub fn regrid_curves(&mut self) -> Result<()> {
        let (t, n) = (self.day_length, self.n_grid);
        if self.lambda_det.t1() != t || self.lambda_det.len() != n || self.lambda_det.t0() != 0.0 {
            self.lambda_det = self.lambda_det.resample(0.0, t, n)?;
        }
        if self.varsigma_det.t1() != t || self.varsigma_det.len() != n || self.varsigma_det.t0() != 0.0 {
            self.varsigma_det = self.varsigma_det.resample(0.0, t, n)?;
        }
        Ok(())
    }
}

/// Bundled deterministic intraday shapes of `λ` (ticks per second) and `ς`,
/// stored for a 23400-second day and stretched to `day_length`.
pub fn default_curves(day_length: f64, n_grid: usize) -> Result<(IntensityCurve, IntensityCurve)> {
    let scale = day_length / TRADING_DAY_SECONDS;
    let load = |text: &str| -> Result<IntensityCurve> {
        let points = parse_curve_csv(text, "<bundled>")?;
        let stretched: Vec<(f64, f64)> = points.iter().map(|&(t, v)| (t * scale, v)).collect();
        IntensityCurve::from_points(&stretched, 0.0, day_length, n_grid)
    };
    Ok((load(LAMBDA_DET_CSV)?, load(VARSIGMA_DET_CSV)?))
}

/// Parses a `t,value` curve file (header optional, `#` comments allowed).
pub fn parse_curve_csv(text: &str, origin: &str) -> Result<Vec<(f64, f64)>> {
    let mut points = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(',');
        let (a, b) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (a.trim(), b.trim()),
            _ => {
                return Err(Error::Data {
                    path: origin.into(),
                    line: idx as u64 + 1,
                    msg: format!("expected 't,value', got '{line}'"),
                })
            }
        };
        match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(t), Ok(v)) => points.push((t, v)),
            _ if points.is_empty() && a == "t" => continue,
            _ => {
                return Err(Error::Data {
                    path: origin.into(),
                    line: idx as u64 + 1,
                    msg: format!("cannot parse '{line}' as numbers"),
                })
            }
        }
    }
    Ok(points)
}

/// Spot variance `σ² = ς² λ` on the common grid.
pub fn spot_variance(lambda: &IntensityCurve, varsigma: &IntensityCurve) -> Result<IntensityCurve> {
    lambda.zip_with(varsigma, |l, s| s * s * l)
}

/// Integrated variance `∫ ς² λ`.
pub fn integrated_variance(lambda: &IntensityCurve, varsigma: &IntensityCurve) -> Result<f64> {
    if !lambda.same_grid(varsigma) {
        return Err(Error::GridMismatch);
    }
    let v: Vec<f64> = lambda
        .values()
        .iter()
        .zip(varsigma.values())
        .map(|(l, s)| s * s * l)
        .collect();
    Ok(trapezoid(&v, lambda.dt()))
}

/// Integrated quarticity of the tick-time model, `∫ ς⁴ λ`.
pub fn integrated_quarticity(lambda: &IntensityCurve, varsigma: &IntensityCurve) -> Result<f64> {
    if !lambda.same_grid(varsigma) {
        return Err(Error::GridMismatch);
    }
    let v: Vec<f64> = lambda
        .values()
        .iter()
        .zip(varsigma.values())
        .map(|(l, s)| s.powi(4) * l)
        .collect();
    Ok(trapezoid(&v, lambda.dt()))
}

/// One simulated day with its latent curves and scalar truths.
#[derive(Debug, Clone)]
pub struct DayPanel {
    pub day: u64,
    pub lambda_curve: IntensityCurve,
    pub varsigma_curve: IntensityCurve,
    pub ticks_clean: TickSeries,
    pub ticks_noisy: TickSeries,
    pub iv: f64,
    pub riv: f64,
    pub iq: f64,
}

impl DayPanel {
    /// Observed ticks under an alternative noise specification, using the
    /// day's dedicated noise stream.
    pub fn observe(&self, noise: &NoiseSpec, master_seed: u64) -> Result<TickSeries> {
        let mut rng = day_stream(master_seed, self.day, DayStream::Noise(noise.kind.ordinal()));
        contaminate(&self.ticks_clean, noise, &mut rng)
    }
}

/// Simulates day `day` of the run keyed by `master_seed`.
pub fn simulate_day(cfg: &SimConfig, master_seed: u64, day: u64) -> Result<DayPanel> {
    cfg.validate()?;
    let steps = cfg.n_grid - 1;
    let lambda_ou = simulate_ou(
        &cfg.lambda_ou,
        steps,
        &mut day_stream(master_seed, day, DayStream::LambdaOu),
    )?;
    let varsigma_ou = simulate_ou(
        &cfg.varsigma_ou,
        steps,
        &mut day_stream(master_seed, day, DayStream::VarsigmaOu),
    )?;
    let lambda_curve = build_intensity(&cfg.lambda_det, &lambda_ou.values, cfg.lambda_ou.exp_scale)?;
    let varsigma_curve = build_intensity(&cfg.varsigma_det, &varsigma_ou.values, cfg.varsigma_ou.exp_scale)?;

    let arrivals = simulate_arrivals(&lambda_curve, &mut day_stream(master_seed, day, DayStream::Arrivals))?;
    let leverage = (cfg.leverage_rho != 0.0).then(|| Leverage {
        rho: cfg.leverage_rho,
        innovations: &varsigma_ou.innovations,
        innovation_sd: cfg.varsigma_ou.innovation_sd,
    });
    let ticks_clean = simulate_prices(
        &arrivals,
        &varsigma_curve,
        leverage,
        &mut day_stream(master_seed, day, DayStream::Prices),
    )?;

    let iv = integrated_variance(&lambda_curve, &varsigma_curve)?;
    let iq = integrated_quarticity(&lambda_curve, &varsigma_curve)?;
    let riv = ticks_clean.riv().unwrap_or(0.0);
    let mut panel = DayPanel {
        day,
        lambda_curve,
        varsigma_curve,
        ticks_noisy: ticks_clean.clone(),
        ticks_clean,
        iv,
        riv,
        iq,
    };
    panel.ticks_noisy = panel.observe(&cfg.noise, master_seed)?;
    Ok(panel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn ou_zero_drift_zero_noise_stays_at_zero() {
        assert_eq!(ou_recursion(0.0, 0.0, &[0.0; 5]), vec![0.0; 6]);
    }

    #[test]
    fn ou_full_mean_reversion() {
        let path = ou_recursion(1.0, 7.0, &[0.0]);
        assert_eq!(path, vec![7.0, 0.0]);
    }

    #[test]
    fn ou_spec_validation() {
        assert!(OuSpec::new(0.0, 1.0, 0.01).is_err());
        assert!(OuSpec::new(0.5, 1.0, -1.0).is_err());
        assert!(OuSpec::new(0.0002, 1.0, 0.01).is_ok());
    }

    #[test]
    fn build_intensity_zero_path_returns_det() {
        let det = IntensityCurve::from_fn(0.0, 10.0, 11, |t| 1.0 + t * t).unwrap();
        let out = build_intensity(&det, &[0.0; 11], 0.01).unwrap();
        assert_eq!(out, det);
    }

    #[test]
    fn build_intensity_has_unit_mean_multiplier() {
        let det = IntensityCurve::constant(0.0, 100.0, 101, 100.0).unwrap();
        let path = simulate_ou(&OuSpec::lambda_default(), 100, &mut stream(1, 1)).unwrap();
        let out = build_intensity(&det, &path.values, 50.0 * 0.01).unwrap();
        let ratio = out.map(|v| v / 100.0).unwrap();
        assert!((ratio.mean() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn build_intensity_length_mismatch() {
        let det = IntensityCurve::constant(0.0, 1.0, 3, 1.0).unwrap();
        assert!(matches!(
            build_intensity(&det, &[0.0; 2], 0.01),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn bundled_curves_are_positive_and_shaped() {
        let cfg = SimConfig::default();
        let l = &cfg.lambda_det;
        let s = &cfg.varsigma_det;
        assert_eq!(l.len(), DEFAULT_N_GRID);
        // More trading near the close, larger tick variance near the open.
        assert!(l.value_at(23_300.0) > l.value_at(11_700.0));
        assert!(s.value_at(100.0) > s.value_at(11_700.0));
        let iv = integrated_variance(l, s).unwrap();
        assert!(iv > 0.5 && iv < 2.0, "iv = {iv}");
    }

    #[test]
    fn zero_arrivals_give_constant_path() {
        let vs = IntensityCurve::constant(0.0, 1.0, 3, 0.1).unwrap();
        let ticks = simulate_prices(&[], &vs, None, &mut stream(0, 0)).unwrap();
        assert!(ticks.is_empty());
        assert_eq!(ticks.riv(), Some(0.0));
        assert_eq!(ticks.close_price(), 0.0);
    }

    #[test]
    fn unsorted_arrivals_are_rejected() {
        let vs = IntensityCurve::constant(0.0, 1.0, 3, 0.1).unwrap();
        assert!(matches!(
            simulate_prices(&[0.5, 0.2], &vs, None, &mut stream(0, 0)),
            Err(Error::UnsortedArrivals(1))
        ));
    }

    #[test]
    fn no_noise_is_identity() {
        let vs = IntensityCurve::constant(0.0, 1.0, 3, 0.1).unwrap();
        let ticks = simulate_prices(&[0.1, 0.4, 0.9], &vs, None, &mut stream(0, 0)).unwrap();
        let out = contaminate(&ticks, &NoiseSpec::none(), &mut stream(0, 1)).unwrap();
        assert_eq!(out, ticks);
    }

    #[test]
    fn diurnal_multiplier_is_v_shaped() {
        let spec = NoiseSpec::diurnal_arma(1.0);
        assert_eq!(spec.diurnal_multiplier(0.0, 10.0), 2.0);
        assert_eq!(spec.diurnal_multiplier(10.0, 10.0), 2.0);
        assert_eq!(spec.diurnal_multiplier(5.0, 10.0), 1.0);
        assert_eq!(spec.diurnal_multiplier(2.5, 10.0), 1.5);
    }

    #[test]
    fn unit_normalized_day_has_unit_iv() {
        let t = 23_400.0;
        let l = IntensityCurve::constant(0.0, t, 101, 1.0).unwrap();
        let s = IntensityCurve::constant(0.0, t, 101, 1.0 / t.sqrt()).unwrap();
        assert!((integrated_variance(&l, &s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simulate_day_invariants() {
        let cfg = SimConfig {
            noise: NoiseSpec::iid(DEFAULT_NOISE_VARIANCE),
            ..SimConfig::default()
        };
        let panel = simulate_day(&cfg, 11, 3).unwrap();
        let riv: f64 = panel.ticks_clean.true_varsigma().unwrap().iter().map(|s| s * s).sum();
        assert_eq!(panel.riv, riv);
        assert!(panel.iv > 0.0 && panel.iq > 0.0);
        assert_eq!(panel.ticks_noisy.times(), panel.ticks_clean.times());
        assert_ne!(panel.ticks_noisy.log_prices(), panel.ticks_clean.log_prices());
        // N(T) is Poisson with mean Λ(T); a 6-sigma band is generous.
        let lam = panel.lambda_curve.integral();
        assert!((panel.ticks_clean.len() as f64 - lam).abs() < 6.0 * lam.sqrt());
        let again = simulate_day(&cfg, 11, 3).unwrap();
        assert_eq!(again.ticks_noisy, panel.ticks_noisy);
    }

    #[test]
    fn parse_curve_csv_accepts_header_and_reports_lines() {
        let pts = parse_curve_csv("t,value\n0,1\n# c\n1,2\n", "x").unwrap();
        assert_eq!(pts, vec![(0.0, 1.0), (1.0, 2.0)]);
        match parse_curve_csv("0,1\n1,a\n", "x") {
            Err(Error::Data { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
