use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `proxy/estimate − ln(proxy/estimate) − 1`.
pub fn qlike(proxy: f64, estimate: f64) -> Result<f64> {
    if !(proxy > 0.0 && estimate > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "QLIKE needs positive inputs, got proxy {proxy} and estimate {estimate}"
        )));
    }
    let x = proxy / estimate;
    Ok(x - x.ln() - 1.0)
}

/// `(proxy − estimate)²`.
pub fn mse(proxy: f64, estimate: f64) -> f64 {
    (proxy - estimate).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LossFunction {
    Mse,
    Qlike,
}

impl LossFunction {
    pub const ALL: [LossFunction; 2] = [LossFunction::Mse, LossFunction::Qlike];

    pub fn tag(self) -> &'static str {
        match self {
            LossFunction::Mse => "mse",
            LossFunction::Qlike => "qlike",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mse" => Ok(LossFunction::Mse),
            "qlike" => Ok(LossFunction::Qlike),
            other => Err(Error::Config(format!("unknown loss '{other}'"))),
        }
    }

    /// The loss stored in a record; QLIKE is absent for non-positive estimates.
    pub fn of(self, record: &LossRecord) -> Option<f64> {
        match self {
            LossFunction::Mse => Some(record.mse),
            LossFunction::Qlike => record.qlike,
        }
    }
}

impl fmt::Display for LossFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One row of a loss table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub day: u64,
    pub asset: String,
    pub estimator: String,
    pub scheme: String,
    #[serde(rename = "M")]
    pub m: usize,
    pub estimate: f64,
    pub proxy: f64,
    pub mse: f64,
    pub qlike: Option<f64>,
}

impl LossRecord {
    pub fn new(
        day: u64,
        asset: impl Into<String>,
        estimator: impl Into<String>,
        scheme: impl Into<String>,
        m: usize,
        estimate: f64,
        proxy: f64,
    ) -> Self {
        Self {
            day,
            asset: asset.into(),
            estimator: estimator.into(),
            scheme: scheme.into(),
            m,
            estimate,
            proxy,
            mse: mse(proxy, estimate),
            qlike: qlike(proxy, estimate).ok(),
        }
    }
}
