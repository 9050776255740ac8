//! Tick-time stochastic volatility: simulation, intrinsic-time sampling,
//! realized variance estimation and forecast evaluation.

// `!(x > 0.0)` checks deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curve;
pub mod error;
pub mod estimators;
pub mod eval;
pub mod intensity;
pub mod io;
pub mod rng;
pub mod sampling;
pub mod sim;

pub use curve::{Accumulated, IntensityCurve};
pub use error::{Error, Result};
pub use estimators::{preavg_rv, rv, Estimator, PreAvgSpec};
pub use sampling::{SamplingGrid, Scheme, SchemeKind};
pub use sim::{simulate_day, DayPanel, NoiseKind, NoiseSpec, SimConfig, TickSeries};
