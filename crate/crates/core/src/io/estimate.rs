//! Variance estimates for observed tick data.
//!
//! Intensity-based and business-time schemes need curves. For each day they
//! come from the rolling average of kernel estimates over earlier days of
//! the same file; a day without history uses its own estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{Estimator, PreAvgSpec};
use crate::intensity::{estimate_daily_curves, DailyCurves, KernelSpec, RollingEstimate};
use crate::sampling::{returns_from_grid, tick_variance_from_curve, Scheme, SchemeKind};
use crate::sim::TickSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub day: u64,
    pub scheme: String,
    pub estimator: String,
    #[serde(rename = "M")]
    pub m: usize,
    pub n_ticks: usize,
    pub estimate: f64,
}

#[derive(Debug, Clone)]
pub struct EstimateSettings {
    pub schemes: Vec<SchemeKind>,
    pub frequencies: Vec<usize>,
    pub estimators: Vec<Estimator>,
    pub preavg: PreAvgSpec,
    pub kernel: KernelSpec,
    pub window_days: usize,
}

#[derive(Debug, Clone, Default)]
pub struct EstimateOutput {
    pub rows: Vec<EstimateRow>,
    /// (day, scheme, M, estimator) combinations without enough data.
    pub skipped: usize,
}

pub fn estimate_ticks(days: &[(u64, TickSeries)], settings: &EstimateSettings) -> Result<EstimateOutput> {
    let needs_curves = settings.schemes.iter().any(|s| *s != SchemeKind::Cts && *s != SchemeKind::Rtts);
    let mut rolling = RollingEstimate::new(settings.window_days)?;
    let mut out = EstimateOutput::default();
    for (day, ticks) in days {
        let own: Option<DailyCurves> = if needs_curves && ticks.len() >= 2 {
            Some(estimate_daily_curves(ticks, &settings.kernel)?)
        } else {
            None
        };
        let curves = match rolling.averaged()? {
            Some(c) => Some(c),
            None => own.clone(),
        };
        if let Some(c) = own {
            rolling.push(c);
        }
        let tick_var = curves.as_ref().map(|c| tick_variance_from_curve(ticks, &c.varsigma2));

        for &kind in &settings.schemes {
            let scheme = match (kind, curves.as_ref()) {
                (SchemeKind::Cts, _) => Scheme::Cts,
                (SchemeKind::Rtts, _) => Scheme::Rtts,
                (SchemeKind::Itts, Some(c)) => Scheme::Itts { lambda: &c.lambda },
                (SchemeKind::Ibts, Some(c)) => Scheme::Ibts {
                    spot_variance: &c.spot_variance,
                },
                (SchemeKind::Rbts, Some(_)) => Scheme::Rbts {
                    tick_variance: tick_var.as_deref().unwrap_or(&[]),
                },
                _ => {
                    out.skipped += settings.frequencies.len() * settings.estimators.len();
                    continue;
                }
            };
            for &m in &settings.frequencies {
                let grid = match scheme.grid(ticks, m) {
                    Ok(g) => g,
                    Err(Error::InsufficientTicks { .. }) => {
                        out.skipped += settings.estimators.len();
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let returns = returns_from_grid(ticks, &grid);
                for &est in &settings.estimators {
                    match est.estimate(&returns, &settings.preavg) {
                        Ok(v) => out.rows.push(EstimateRow {
                            day: *day,
                            scheme: kind.tag().to_string(),
                            estimator: est.tag().to_string(),
                            m,
                            n_ticks: ticks.len(),
                            estimate: v,
                        }),
                        Err(Error::InsufficientData(_)) => out.skipped += 1,
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
    Ok(out)
}
