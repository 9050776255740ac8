//! Forecast and estimator evaluation: losses, Diebold–Mariano tests,
//! proxy-based ranking, HAR forecasting and Monte Carlo accuracy metrics.

pub mod dm;
pub mod har;
pub mod loss;
pub mod metrics;
pub mod ranking;

pub use dm::{dm_test, stationary_bootstrap_indices, DmConfig, DmResult};
pub use har::{har_design, har_fit, har_forecast, rolling_forecast, HarFit};
pub use loss::{mse, qlike, LossFunction, LossRecord};
pub use metrics::{relative_bias, relative_bias_se, relative_rmse};
pub use ranking::{patton_rank, DEFAULT_SIGNIFICANCE, Ranking, RankingCell, RankingSummary};
