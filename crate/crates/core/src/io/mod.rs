//! Configuration, tick files, the experiment driver and CSV/SVG outputs.

pub mod config;
pub mod estimate;
pub mod experiment;
pub mod plotdata;
pub mod tables;
pub mod ticks;

pub use config::{ExperimentConfig, ProxyKind};
pub use estimate::{estimate_ticks, EstimateOutput, EstimateRow, EstimateSettings};
pub use experiment::{run_experiment, run_experiment_with_threads, write_experiment, ExperimentOutput, ExperimentScheme};
pub use tables::AggregateRow;
pub use ticks::{ingest_ticks, write_ticks, TickIngest};
