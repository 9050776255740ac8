//! HAR regression of daily realized variance on its lagged daily, weekly and
//! monthly averages.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Days in the monthly average; also the burn-in before the first regression row.
pub const HAR_LAGS: usize = 22;
const WEEK: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct HarFit {
    /// `(β₀, β_D, β_W, β_M)`.
    pub beta: [f64; 4],
    pub residual_variance: f64,
    pub n_obs: usize,
    /// Ridge penalty used when the design was rank deficient.
    pub ridge_penalty: Option<f64>,
}

/// Regressors `[1, x_{d−1}, mean(x_{d−5..d}), mean(x_{d−22..d})]` built from
/// the 22 values preceding day `d`.
pub fn har_regressors(history: &[f64]) -> Result<[f64; 4]> {
    if history.len() < HAR_LAGS {
        return Err(Error::InsufficientData(format!(
            "HAR regressors need {HAR_LAGS} past values, got {}",
            history.len()
        )));
    }
    let n = history.len();
    let mean = |k: usize| history[n - k..].iter().sum::<f64>() / k as f64;
    Ok([1.0, history[n - 1], mean(WEEK), mean(HAR_LAGS)])
}

/// Design matrix and response for days `22..n`.
pub fn har_design(series: &[f64]) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if series.len() <= HAR_LAGS {
        return Err(Error::InsufficientData(format!(
            "HAR needs more than {HAR_LAGS} observations, got {}",
            series.len()
        )));
    }
    let rows = series.len() - HAR_LAGS;
    let mut x = DMatrix::zeros(rows, 4);
    for (r, d) in (HAR_LAGS..series.len()).enumerate() {
        let reg = har_regressors(&series[..d])?;
        for (c, v) in reg.iter().enumerate() {
            x[(r, c)] = *v;
        }
    }
    let y = DVector::from_column_slice(&series[HAR_LAGS..]);
    Ok((x, y))
}

/// OLS through a thin QR decomposition. A rank-deficient design falls back
/// to ridge regression with penalty `1e-10 · trace(X'X) / 4`.
pub fn har_fit(series: &[f64]) -> Result<HarFit> {
    if series.len() < HAR_LAGS + 5 {
        return Err(Error::InsufficientData(format!(
            "HAR needs at least {} observations, got {}",
            HAR_LAGS + 5,
            series.len()
        )));
    }
    let (x, y) = har_design(series)?;
    let n_obs = y.len();
    let qr = x.clone().qr();
    let r = qr.r();
    let max_diag = (0..4).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let rank_deficient = (0..4).any(|i| r[(i, i)].abs() <= 1e-10 * max_diag.max(f64::MIN_POSITIVE));
    let (beta, ridge_penalty) = if rank_deficient {
        let xtx = x.transpose() * &x;
        let penalty = 1e-10 * xtx.trace() / 4.0;
        let a = &xtx + DMatrix::identity(4, 4) * penalty;
        let b = x.transpose() * &y;
        let beta = a
            .cholesky()
            .map(|c| c.solve(&b))
            .ok_or_else(|| Error::InsufficientData("HAR design is degenerate".into()))?;
        (beta, Some(penalty))
    } else {
        let rhs = qr.q().transpose() * &y;
        let beta = r
            .solve_upper_triangular(&rhs)
            .ok_or_else(|| Error::InsufficientData("HAR design is singular".into()))?;
        (beta, None)
    };
    let resid = &y - &x * &beta;
    let dof = n_obs.saturating_sub(4).max(1);
    Ok(HarFit {
        beta: [beta[0], beta[1], beta[2], beta[3]],
        residual_variance: resid.norm_squared() / dof as f64,
        n_obs,
        ridge_penalty,
    })
}

/// One-step forecast from the last 22 values of `history`.
pub fn har_forecast(fit: &HarFit, history: &[f64]) -> Result<f64> {
    let reg = har_regressors(history)?;
    Ok(reg.iter().zip(&fit.beta).map(|(x, b)| x * b).sum())
}

/// Forecasts `series[t]` for every `t ≥ window` from a HAR fitted on
/// `series[t − window..t]`.
pub fn rolling_forecast(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if window >= series.len() {
        return Err(Error::InsufficientData(format!(
            "rolling window {window} leaves no day to forecast in {} observations",
            series.len()
        )));
    }
    (window..series.len())
        .map(|t| {
            let fit = har_fit(&series[t - window..t])?;
            har_forecast(&fit, &series[..t])
        })
        .collect()
}
