//! Experiment configuration read from a flat TOML file.
//!
//! Every key is optional; see `config/example.toml` for the full list
//! with defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curve::IntensityCurve;
use crate::error::{Error, Result};
use crate::estimators::{Estimator, PreAvgSpec};
use crate::eval::DmConfig;
use crate::intensity::{KernelKind, KernelSpec};
use crate::sim::{
    default_curves, parse_curve_csv, NoiseKind, NoiseSpec, OuSpec, SimConfig, DEFAULT_N_GRID,
    DEFAULT_NOISE_VARIANCE, TRADING_DAY_SECONDS,
};

use super::experiment::ExperimentScheme;

/// Days simulated by default.
pub const DESK_SCALE_DAYS: usize = 500;
/// Days simulated with `--paper-scale`.
pub const PAPER_SCALE_DAYS: usize = 4800;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProxyKind {
    /// The day's integrated variance.
    Iv,
    /// Next-day realized variance from 5-minute calendar-time returns.
    NextDayRv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "T")]
    pub day_length: f64,
    pub n_grid: usize,
    #[serde(rename = "D")]
    pub days: usize,
    pub master_seed: u64,

    pub lambda_curve: Option<PathBuf>,
    pub varsigma_curve: Option<PathBuf>,
    pub lambda_mean_reversion: f64,
    pub lambda_innovation_sd: f64,
    pub lambda_exp_scale: f64,
    pub varsigma_mean_reversion: f64,
    pub varsigma_innovation_sd: f64,
    pub varsigma_exp_scale: f64,

    pub leverage: bool,
    pub leverage_rho: f64,

    pub noise: Vec<String>,
    pub noise_variance: f64,
    pub noise_ar: f64,
    pub noise_ma: f64,
    pub noise_diurnal_ratio: f64,

    pub schemes: Vec<String>,
    pub estimators: Vec<String>,
    pub rv_frequencies: Vec<usize>,
    pub preavg_frequencies: Vec<usize>,
    pub preavg_delta: f64,

    pub kernel: String,
    /// Seconds; `T/50` when absent.
    pub bandwidth: Option<f64>,
    pub mirror: bool,
    pub window_days: usize,
    pub estimation_points: usize,

    pub proxy: ProxyKind,
    pub mean_block_length: f64,
    pub n_boot: usize,
    /// Days simulated in parallel before results are merged.
    pub chunk_days: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let lam = OuSpec::lambda_default();
        let vs = OuSpec::varsigma_default();
        let noise = NoiseSpec::iid(DEFAULT_NOISE_VARIANCE);
        Self {
            day_length: TRADING_DAY_SECONDS,
            n_grid: DEFAULT_N_GRID,
            days: DESK_SCALE_DAYS,
            master_seed: 42,
            lambda_curve: None,
            varsigma_curve: None,
            lambda_mean_reversion: lam.mean_reversion,
            lambda_innovation_sd: lam.innovation_sd,
            lambda_exp_scale: lam.exp_scale,
            varsigma_mean_reversion: vs.mean_reversion,
            varsigma_innovation_sd: vs.innovation_sd,
            varsigma_exp_scale: vs.exp_scale,
            leverage: false,
            leverage_rho: -0.5,
            noise: vec!["none".into(), "iid".into(), "diurnal_arma".into()],
            noise_variance: noise.variance,
            noise_ar: noise.ar,
            noise_ma: noise.ma,
            noise_diurnal_ratio: noise.diurnal_ratio,
            schemes: ExperimentScheme::ALL.iter().map(|s| s.tag().to_string()).collect(),
            estimators: vec!["rv".into(), "preavg".into()],
            rv_frequencies: Estimator::Rv.default_frequencies().to_vec(),
            preavg_frequencies: Estimator::PreAvg.default_frequencies().to_vec(),
            preavg_delta: 1.0,
            kernel: "gaussian".into(),
            bandwidth: None,
            mirror: true,
            window_days: 50,
            estimation_points: 391,
            proxy: ProxyKind::Iv,
            mean_block_length: DmConfig::default().mean_block_length,
            n_boot: DmConfig::default().n_boot,
            chunk_days: 64,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
        // Curve paths are relative to the config file.
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.lambda_curve, &mut cfg.varsigma_curve].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::Config(format!("{field}: {msg}")));
        if !(self.day_length > 0.0 && self.day_length.is_finite()) {
            return bad("T", format!("must be positive, got {}", self.day_length));
        }
        if self.n_grid < 2 {
            return bad("n_grid", format!("must be at least 2, got {}", self.n_grid));
        }
        if self.days == 0 {
            return bad("D", "must be at least 1".into());
        }
        if self.noise.is_empty() {
            return bad("noise", "at least one noise setting is required".into());
        }
        if self.schemes.is_empty() {
            return bad("schemes", "at least one scheme is required".into());
        }
        if self.estimators.is_empty() {
            return bad("estimators", "at least one estimator is required".into());
        }
        self.noise_kinds()?;
        self.scheme_list()?;
        for e in self.estimator_list()? {
            let freqs = self.frequencies(e);
            if freqs.is_empty() {
                return bad(freq_field(e), "must not be empty".into());
            }
            if freqs.contains(&0) {
                return bad(freq_field(e), "every M must be at least 1".into());
            }
        }
        if self.window_days == 0 {
            return bad("window_days", "must be at least 1".into());
        }
        if self.chunk_days == 0 {
            return bad("chunk_days", "must be at least 1".into());
        }
        if !(self.preavg_delta > 0.0) {
            return bad("preavg_delta", format!("must be positive, got {}", self.preavg_delta));
        }
        if !(self.mean_block_length >= 1.0) {
            return bad("mean_block_length", format!("must be at least 1, got {}", self.mean_block_length));
        }
        if self.n_boot == 0 {
            return bad("n_boot", "must be positive".into());
        }
        KernelKind::parse(&self.kernel).map_err(|e| Error::Config(format!("kernel: {e}")))?;
        self.kernel_spec()
            .validate()
            .map_err(|e| Error::Config(format!("bandwidth/estimation_points: {e}")))?;
        for (field, spec) in [
            ("lambda_*", self.lambda_ou()),
            ("varsigma_*", self.varsigma_ou()),
        ] {
            spec.validate().map_err(|e| Error::Config(format!("{field}: {e}")))?;
        }
        if !(-1.0..=1.0).contains(&self.leverage_rho) {
            return bad("leverage_rho", format!("must lie in [-1, 1], got {}", self.leverage_rho));
        }
        self.noise_spec(NoiseKind::IidGaussian)
            .validate()
            .map_err(|e| Error::Config(format!("noise_*: {e}")))
    }

    /// Applies `--paper-scale`.
    pub fn paper_scale(&mut self) {
        self.days = PAPER_SCALE_DAYS;
    }

    pub fn noise_kinds(&self) -> Result<Vec<NoiseKind>> {
        let kinds = self
            .noise
            .iter()
            .map(|s| NoiseKind::parse(s).map_err(|e| Error::Config(format!("noise: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        no_duplicates("noise", &kinds)?;
        Ok(kinds)
    }

    pub fn scheme_list(&self) -> Result<Vec<ExperimentScheme>> {
        let list = self
            .schemes
            .iter()
            .map(|s| ExperimentScheme::parse(s).map_err(|e| Error::Config(format!("schemes: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        no_duplicates("schemes", &list)?;
        Ok(list)
    }

    pub fn estimator_list(&self) -> Result<Vec<Estimator>> {
        let list = self
            .estimators
            .iter()
            .map(|s| Estimator::parse(s).map_err(|e| Error::Config(format!("estimators: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        no_duplicates("estimators", &list)?;
        Ok(list)
    }

    pub fn frequencies(&self, estimator: Estimator) -> &[usize] {
        match estimator {
            Estimator::Rv => &self.rv_frequencies,
            Estimator::PreAvg => &self.preavg_frequencies,
        }
    }

    pub fn lambda_ou(&self) -> OuSpec {
        OuSpec {
            mean_reversion: self.lambda_mean_reversion,
            innovation_sd: self.lambda_innovation_sd,
            exp_scale: self.lambda_exp_scale,
        }
    }

    pub fn varsigma_ou(&self) -> OuSpec {
        OuSpec {
            mean_reversion: self.varsigma_mean_reversion,
            innovation_sd: self.varsigma_innovation_sd,
            exp_scale: self.varsigma_exp_scale,
        }
    }

    pub fn noise_spec(&self, kind: NoiseKind) -> NoiseSpec {
        NoiseSpec {
            kind,
            variance: self.noise_variance,
            ar: self.noise_ar,
            ma: self.noise_ma,
            diurnal_ratio: self.noise_diurnal_ratio,
        }
    }

    pub fn preavg_spec(&self) -> PreAvgSpec {
        PreAvgSpec {
            delta: self.preavg_delta,
            window: None,
        }
    }

    pub fn kernel_spec(&self) -> KernelSpec {
        KernelSpec {
            kernel: KernelKind::parse(&self.kernel).unwrap_or(KernelKind::Gaussian),
            bandwidth: self.bandwidth.unwrap_or(self.day_length / 50.0),
            mirror: self.mirror,
            grid_points: self.estimation_points,
            noise_adjust: false,
        }
    }

    pub fn dm_config(&self) -> DmConfig {
        DmConfig {
            mean_block_length: self.mean_block_length,
            n_boot: self.n_boot,
        }
    }

    /// Simulation settings with the configured curves on the Euler grid.
    /// The noise field is left at `none`; the driver applies each setting.
    pub fn sim_config(&self) -> Result<SimConfig> {
        let (mut lambda_det, mut varsigma_det) = default_curves(self.day_length, self.n_grid)?;
        if let Some(p) = &self.lambda_curve {
            lambda_det = load_curve(p, self.day_length, self.n_grid)?;
        }
        if let Some(p) = &self.varsigma_curve {
            varsigma_det = load_curve(p, self.day_length, self.n_grid)?;
        }
        let cfg = SimConfig {
            day_length: self.day_length,
            n_grid: self.n_grid,
            lambda_det,
            varsigma_det,
            lambda_ou: self.lambda_ou(),
            varsigma_ou: self.varsigma_ou(),
            leverage_rho: if self.leverage { self.leverage_rho } else { 0.0 },
            noise: NoiseSpec::none(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn freq_field(e: Estimator) -> &'static str {
    match e {
        Estimator::Rv => "rv_frequencies",
        Estimator::PreAvg => "preavg_frequencies",
    }
}

fn no_duplicates<T: PartialEq + std::fmt::Debug>(field: &str, items: &[T]) -> Result<()> {
    for (i, a) in items.iter().enumerate() {
        if items[..i].contains(a) {
            return Err(Error::Config(format!("{field}: duplicate entry {a:?}")));
        }
    }
    Ok(())
}

/// Reads a `t,value` curve file and puts it on `[0, T]` with `n` nodes.
pub fn load_curve(path: &Path, day_length: f64, n: usize) -> Result<IntensityCurve> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let points = parse_curve_csv(&text, &path.display().to_string())?;
    IntensityCurve::from_points(&points, 0.0, day_length, n).map_err(|e| Error::Data {
        path: path.to_path_buf(),
        line: 0,
        msg: e.to_string(),
    })
}
