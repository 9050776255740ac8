//! Realized variance estimators and their closed-form error quantities.

use std::fmt;

use crate::curve::{trapezoid, IntensityCurve};
use crate::error::{Error, Result};
use crate::sampling::{bin_integrals, bin_sums, SamplingGrid};
use crate::sim::{integrated_quarticity, integrated_variance, TickSeries};

/// `Σ r_j²`.
pub fn rv(returns: &[f64]) -> f64 {
    returns.iter().map(|r| r * r).sum()
}

/// Pre-averaging with the tent kernel `g(x) = min(x, 1 − x)` over
/// non-overlapping blocks of `H` returns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreAvgSpec {
    /// `H = max(2, round(δ √M))` when no explicit window is set.
    pub delta: f64,
    pub window: Option<usize>,
}

impl Default for PreAvgSpec {
    fn default() -> Self {
        Self {
            delta: 1.0,
            window: None,
        }
    }
}

impl PreAvgSpec {
    /// `∫₀¹ g²` for the tent kernel.
    pub const G2: f64 = 1.0 / 12.0;
    /// `∫₀¹ (g′)²` for the tent kernel.
    pub const G2_PRIME: f64 = 1.0;

    pub fn with_window(window: usize) -> Self {
        Self {
            delta: 1.0,
            window: Some(window),
        }
    }

    pub fn kernel(x: f64) -> f64 {
        x.min(1.0 - x).max(0.0)
    }

    pub fn window_for(&self, m: usize) -> Result<usize> {
        let h = match self.window {
            Some(h) => h,
            None => {
                if !(self.delta > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "pre-averaging delta must be positive, got {}",
                        self.delta
                    )));
                }
                ((self.delta * (m as f64).sqrt()).round() as usize).max(2)
            }
        };
        if h < 2 {
            return Err(Error::InvalidArgument(format!("pre-averaging window must be ≥ 2, got {h}")));
        }
        Ok(h)
    }
}

/// Pre-averaged realized variance
/// `(1/g₂) Σ_j r̄_j² − K/(2 M g₂) · Σ_{l<H} h²(l/H) · Σ r_i²`, with
/// `r̄_j = Σ_{l=1}^{H−1} g(l/H) r_{(j−1)H+l}` over `K = ⌈M/H⌉ − 1` blocks
/// and `h(l/H) = g((l+1)/H) − g(l/H)`. The correction removes the
/// expected noise contribution to the block sums.
pub fn preavg_rv(returns: &[f64], spec: &PreAvgSpec) -> Result<f64> {
    let m = returns.len();
    let h = spec.window_for(m)?;
    if m < 2 * h {
        return Err(Error::InsufficientData(format!(
            "pre-averaging needs M ≥ 2H, got M = {m}, H = {h}"
        )));
    }
    let weights: Vec<f64> = (1..h).map(|l| PreAvgSpec::kernel(l as f64 / h as f64)).collect();
    let blocks = m.div_ceil(h) - 1;
    let mut block_sq = 0.0;
    for j in 0..blocks {
        let start = j * h;
        let bar: f64 = weights
            .iter()
            .enumerate()
            .map(|(l, w)| w * returns[start + l])
            .sum();
        block_sq += bar * bar;
    }
    let psi: f64 = (0..h)
        .map(|l| {
            let d = PreAvgSpec::kernel((l + 1) as f64 / h as f64) - PreAvgSpec::kernel(l as f64 / h as f64);
            d * d
        })
        .sum();
    let g2 = PreAvgSpec::G2;
    Ok(block_sq / g2 - blocks as f64 / (2.0 * m as f64 * g2) * psi * rv(returns))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    Rv,
    PreAvg,
}

impl Estimator {
    pub fn tag(self) -> &'static str {
        match self {
            Estimator::Rv => "rv",
            Estimator::PreAvg => "preavg",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rv" => Ok(Estimator::Rv),
            "preavg" | "pre_avg" | "pre-averaging" => Ok(Estimator::PreAvg),
            other => Err(Error::Config(format!("unknown estimator '{other}'"))),
        }
    }

    /// Sampling frequencies used for this estimator in the simulation study.
    pub fn default_frequencies(self) -> &'static [usize] {
        match self {
            Estimator::Rv => &[13, 26, 39, 78, 260, 390],
            Estimator::PreAvg => &[78, 260, 390, 780, 2340, 4680],
        }
    }

    pub fn estimate(self, returns: &[f64], spec: &PreAvgSpec) -> Result<f64> {
        match self {
            Estimator::Rv => Ok(rv(returns)),
            Estimator::PreAvg => preavg_rv(returns, spec),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

// ---------------------------------------------------------------------------
// Finite-sample MSE
// ---------------------------------------------------------------------------

/// What the MSE conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    /// Intensities and the realized tick path.
    Jump,
    /// Intensities only.
    Intensity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Riv,
    Iv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MseSetting {
    pub conditioning: Conditioning,
    pub target: Target,
}

impl MseSetting {
    pub const ALL: [MseSetting; 4] = [
        MseSetting::new(Conditioning::Jump, Target::Riv),
        MseSetting::new(Conditioning::Jump, Target::Iv),
        MseSetting::new(Conditioning::Intensity, Target::Riv),
        MseSetting::new(Conditioning::Intensity, Target::Iv),
    ];

    pub const fn new(conditioning: Conditioning, target: Target) -> Self {
        Self {
            conditioning,
            target,
        }
    }
}

/// Data available to [`conditional_mse`]; each setting needs a subset.
#[derive(Debug, Clone, Copy, Default)]
pub struct MseInputs<'a> {
    pub ticks: Option<&'a TickSeries>,
    /// `ς²(t_i)` per tick.
    pub tick_variance: Option<&'a [f64]>,
    pub lambda: Option<&'a IntensityCurve>,
    pub varsigma: Option<&'a IntensityCurve>,
}

/// Closed-form MSE of RV on `grid`:
/// jump/rIV `2Σ rIV_j²`, jump/IV `2Σ rIV_j² + (rIV − IV)²`,
/// intensity/rIV `2Σ IV_j² + 2 IQ`, intensity/IV `2Σ IV_j² + 3 IQ`.
pub fn conditional_mse(grid: &SamplingGrid, inputs: &MseInputs<'_>, setting: MseSetting) -> Result<f64> {
    match setting.conditioning {
        Conditioning::Jump => {
            let ticks = inputs
                .ticks
                .ok_or_else(|| Error::MissingInput("tick path".into()))?;
            let tv = inputs
                .tick_variance
                .ok_or_else(|| Error::MissingInput("tick variance".into()))?;
            let bins = bin_sums(ticks, tv, grid)?;
            let base = 2.0 * bins.iter().map(|b| b * b).sum::<f64>();
            match setting.target {
                Target::Riv => Ok(base),
                Target::Iv => {
                    let (lambda, varsigma) = curves(inputs)?;
                    let riv: f64 = tv.iter().sum();
                    let iv = integrated_variance(lambda, varsigma)?;
                    Ok(base + (riv - iv).powi(2))
                }
            }
        }
        Conditioning::Intensity => {
            let (lambda, varsigma) = curves(inputs)?;
            let spot = lambda.zip_with(varsigma, |l, s| s * s * l)?;
            let bins = bin_integrals(&spot, grid);
            let iq = integrated_quarticity(lambda, varsigma)?;
            let base = 2.0 * bins.iter().map(|b| b * b).sum::<f64>();
            Ok(match setting.target {
                Target::Riv => base + 2.0 * iq,
                Target::Iv => base + 3.0 * iq,
            })
        }
    }
}

fn curves<'a>(inputs: &MseInputs<'a>) -> Result<(&'a IntensityCurve, &'a IntensityCurve)> {
    match (inputs.lambda, inputs.varsigma) {
        (Some(l), Some(s)) => Ok((l, s)),
        _ => Err(Error::MissingInput("trading intensity and tick volatility curves".into())),
    }
}

// ---------------------------------------------------------------------------
// Asymptotic variance
// ---------------------------------------------------------------------------

/// Components of the asymptotic variance of RV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticVariance {
    /// `(2/f) ∫ ς⁴ λ² / φ`, driven by the sampling scheme.
    pub v_phi: f64,
    /// `2 ∫ ς⁴ μ`, driven by clustering of arrivals.
    pub v_mu: f64,
    /// `∫ ς⁴ λ`.
    pub iq: f64,
}

impl AsymptoticVariance {
    pub fn total(&self) -> f64 {
        self.v_phi + self.v_mu + self.iq
    }
}

/// `∫ ς⁴ λ² / φ` over the common grid.
pub fn scheme_integral(phi: &IntensityCurve, lambda: &IntensityCurve, varsigma: &IntensityCurve) -> Result<f64> {
    check_phi(phi, lambda, varsigma)?;
    let v: Vec<f64> = phi
        .values()
        .iter()
        .zip(lambda.values())
        .zip(varsigma.values())
        .map(|((p, l), s)| s.powi(4) * l * l / p)
        .collect();
    Ok(trapezoid(&v, phi.dt()))
}

/// `V_φ + V_μ + IQ` for a sampling density `φ` integrating to one over
/// the curves' common domain (normally `[0, 1]`).
pub fn asymptotic_variance_rv(
    phi: &IntensityCurve,
    mu: Option<&IntensityCurve>,
    f: f64,
    lambda: &IntensityCurve,
    varsigma: &IntensityCurve,
) -> Result<AsymptoticVariance> {
    check_frequency(f)?;
    let v_phi = 2.0 / f * scheme_integral(phi, lambda, varsigma)?;
    let v_mu = match mu {
        Some(mu) => {
            if !mu.same_grid(varsigma) {
                return Err(Error::GridMismatch);
            }
            let v: Vec<f64> = mu
                .values()
                .iter()
                .zip(varsigma.values())
                .map(|(m, s)| s.powi(4) * m)
                .collect();
            2.0 * trapezoid(&v, mu.dt())
        }
        None => 0.0,
    };
    let iq = integrated_quarticity(lambda, varsigma)?;
    Ok(AsymptoticVariance { v_phi, v_mu, iq })
}

/// Components `η²_A`, `η²_B`, `η²_C` of the pre-averaging asymptotic variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreAvgAsymptotics {
    pub eta_a: f64,
    pub eta_b: f64,
    pub eta_c: f64,
    pub delta: f64,
}

impl PreAvgAsymptotics {
    /// `δ η²_A + η²_B / δ + η²_C / δ³`.
    pub fn total(&self) -> f64 {
        self.delta * self.eta_a + self.eta_b / self.delta + self.eta_c / self.delta.powi(3)
    }
}

/// Pre-averaging asymptotic variance with `η²_A = (2/f)∫ς⁴λ²/φ`,
/// `η²_B = 4 (g₂′/g₂) ω² ∫ς²λ` and `η²_C = 2 f (g₂′/g₂)² ω⁴`.
/// Only the second noise moment enters.
pub fn asymptotic_variance_preavg(
    phi: &IntensityCurve,
    f: f64,
    delta: f64,
    omega2: f64,
    lambda: &IntensityCurve,
    varsigma: &IntensityCurve,
) -> Result<PreAvgAsymptotics> {
    check_frequency(f)?;
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    if !(omega2 >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise variance must be non-negative, got {omega2}")));
    }
    let ratio = PreAvgSpec::G2_PRIME / PreAvgSpec::G2;
    let eta_a = 2.0 / f * scheme_integral(phi, lambda, varsigma)?;
    let eta_b = 4.0 * ratio * omega2 * integrated_variance(lambda, varsigma)?;
    let eta_c = 2.0 * f * ratio * ratio * omega2 * omega2;
    Ok(PreAvgAsymptotics {
        eta_a,
        eta_b,
        eta_c,
        delta,
    })
}

/// Frequency minimizing `δ η²_A + η²_C / δ³`:
/// `f = (1/ω²)(g₂ δ² / g₂′)(∫ς⁴λ²/φ)^{1/2}`.
pub fn optimal_frequency(
    omega2: f64,
    delta: f64,
    phi: &IntensityCurve,
    lambda: &IntensityCurve,
    varsigma: &IntensityCurve,
) -> Result<f64> {
    if !(omega2 > 0.0) {
        return Err(Error::InvalidArgument("optimal frequency needs positive noise variance".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    let s = scheme_integral(phi, lambda, varsigma)?;
    Ok(PreAvgSpec::G2 * delta * delta / PreAvgSpec::G2_PRIME * s.sqrt() / omega2)
}

/// Business-time density `ς²λ / IV`.
pub fn bts_phi(lambda: &IntensityCurve, varsigma: &IntensityCurve) -> Result<IntensityCurve> {
    let iv = integrated_variance(lambda, varsigma)?;
    lambda.zip_with(varsigma, |l, s| s * s * l / iv)
}

/// Transaction-time density `λ / Λ`.
pub fn tts_phi(lambda: &IntensityCurve) -> Result<IntensityCurve> {
    lambda.scaled(1.0 / lambda.integral())
}

/// Calendar-time density.
pub fn cts_phi(like: &IntensityCurve) -> Result<IntensityCurve> {
    IntensityCurve::constant(like.t0(), like.t1(), like.len(), 1.0 / (like.t1() - like.t0()))
}

fn check_frequency(f: f64) -> Result<()> {
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::InvalidArgument(format!("frequency must be positive, got {f}")));
    }
    Ok(())
}

fn check_phi(phi: &IntensityCurve, lambda: &IntensityCurve, varsigma: &IntensityCurve) -> Result<()> {
    if !phi.same_grid(lambda) || !phi.same_grid(varsigma) {
        return Err(Error::GridMismatch);
    }
    let mass = phi.integral();
    if (mass - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "sampling density must integrate to 1, got {mass}"
        )));
    }
    Ok(())
}
