use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use ttsv::eval::{patton_rank, rolling_forecast, DmConfig, LossFunction, DEFAULT_SIGNIFICANCE};
use ttsv::io::config::{DESK_SCALE_DAYS, PAPER_SCALE_DAYS};
use ttsv::io::plotdata::emit_plotdata;
use ttsv::io::tables::{read_aggregate, read_loss_table, write_ranking, write_rows, ForecastRow, TruthRow};
use ttsv::io::{
    estimate_ticks, ingest_ticks, run_experiment, write_experiment, write_ticks, EstimateSettings, ExperimentConfig,
};
use ttsv::{simulate_day, Error, Estimator, NoiseKind, SchemeKind, TickSeries};

/// Tick-time stochastic volatility simulation, sampling and evaluation.
#[derive(Parser, Debug)]
#[command(name = "ttsv", version)]
struct Cli {
    /// TOML configuration file; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate days and write ticks.csv and truth.csv.
    Simulate {
        /// Number of days, overriding the configuration.
        #[arg(long)]
        days: Option<usize>,
        /// Noise setting applied to the written prices.
        #[arg(long, default_value = "none")]
        noise: String,
    },
    /// Estimate daily variance from a tick file into estimates.csv.
    Estimate {
        #[arg(long)]
        ticks: PathBuf,
        /// Sampling schemes: cts, itts, rtts, ibts, rbts.
        #[arg(long, num_args = 1.., default_values_t = vec!["cts".to_string()])]
        scheme: Vec<String>,
        /// Sampling frequencies.
        #[arg(long = "M", num_args = 1.., default_values_t = vec![78])]
        m: Vec<usize>,
        /// Estimators: rv, preavg.
        #[arg(long, num_args = 1.., default_values_t = vec!["rv".to_string()])]
        estimator: Vec<String>,
        /// Kernel bandwidth in seconds.
        #[arg(long)]
        bandwidth: Option<f64>,
        /// Days in the rolling curve average.
        #[arg(long)]
        window_days: Option<usize>,
        /// Disable boundary reflection in kernel estimates.
        #[arg(long)]
        no_mirror: bool,
    },
    /// Run the Monte Carlo study; writes loss_table.csv and aggregate.csv.
    Experiment {
        /// Number of evaluation days, overriding the configuration.
        #[arg(long)]
        days: Option<usize>,
        /// Use the full-size day count instead of the desk-scale default.
        #[arg(long)]
        paper_scale: bool,
    },
    /// Rank schemes against a baseline with Diebold-Mariano tests.
    Evaluate {
        #[arg(long)]
        loss_table: Option<PathBuf>,
        #[arg(long, default_value = "cts")]
        baseline: String,
        /// Loss functions: mse, qlike.
        #[arg(long, num_args = 1.., default_values_t = vec!["mse".to_string(), "qlike".to_string()])]
        loss: Vec<String>,
        #[arg(long)]
        n_boot: Option<usize>,
        #[arg(long)]
        block_length: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_SIGNIFICANCE)]
        significance: f64,
    },
    /// Rolling one-step HAR forecasts of a variance series into forecasts.csv.
    Forecast {
        #[arg(long)]
        series: PathBuf,
        /// Column holding the series.
        #[arg(long, default_value = "estimate")]
        column: String,
        /// Keep only rows where a column equals a value (`name=value`).
        #[arg(long = "filter")]
        filters: Vec<String>,
        /// Trailing days used for each fit.
        #[arg(long, default_value_t = 803)]
        window: usize,
    },
    /// Per-panel CSVs (and optional SVGs) from an aggregate table.
    Plotdata {
        #[arg(long)]
        aggregate: Option<PathBuf>,
        #[arg(long)]
        svg: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}

fn run(cli: Cli) -> ttsv::Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| Error::Config(format!("threads: {e}")))?;
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    std::fs::create_dir_all(&cli.out).map_err(|e| Error::Io {
        path: cli.out.clone(),
        source: e,
    })?;
    let out = cli.out.as_path();

    match cli.command {
        Command::Simulate { days, noise } => {
            if let Some(d) = days {
                cfg.days = d;
            }
            cfg.validate()?;
            simulate(&cfg, &noise, out)
        }
        Command::Estimate {
            ticks,
            scheme,
            m,
            estimator,
            bandwidth,
            window_days,
            no_mirror,
        } => {
            if let Some(b) = bandwidth {
                cfg.bandwidth = Some(b);
            }
            if let Some(w) = window_days {
                cfg.window_days = w;
            }
            if no_mirror {
                cfg.mirror = false;
            }
            cfg.validate()?;
            if m.contains(&0) {
                return Err(Error::Config("M: frequencies must be at least 1".into()));
            }
            let settings = EstimateSettings {
                schemes: parse_all("scheme", &scheme, SchemeKind::parse)?,
                frequencies: m,
                estimators: parse_all("estimator", &estimator, Estimator::parse)?,
                preavg: cfg.preavg_spec(),
                kernel: cfg.kernel_spec(),
                window_days: cfg.window_days,
            };
            let ingest = ingest_ticks(&ticks, cfg.day_length)?;
            if ingest.duplicates_collapsed > 0 {
                eprintln!("collapsed {} duplicate timestamps", ingest.duplicates_collapsed);
            }
            let result = estimate_ticks(&ingest.days, &settings)?;
            if result.skipped > 0 {
                eprintln!("skipped {} cells with too few ticks", result.skipped);
            }
            write_rows(&out.join("estimates.csv"), &result.rows)
        }
        Command::Experiment { days, paper_scale } => {
            if paper_scale {
                eprintln!(
                    "warning: paper scale simulates {PAPER_SCALE_DAYS} days instead of {DESK_SCALE_DAYS}; expect a long run"
                );
                cfg.paper_scale();
            }
            if let Some(d) = days {
                cfg.days = d;
            }
            let result = run_experiment(&cfg)?;
            if result.skipped_cells > 0 {
                eprintln!("skipped {} cells with too few ticks", result.skipped_cells);
            }
            write_experiment(&result, out)
        }
        Command::Evaluate {
            loss_table,
            baseline,
            loss,
            n_boot,
            block_length,
            significance,
        } => {
            let path = loss_table.unwrap_or_else(|| out.join("loss_table.csv"));
            let records = read_loss_table(&path)?;
            let losses: Vec<LossFunction> = parse_all("loss", &loss, LossFunction::parse)?;
            let dm = DmConfig {
                mean_block_length: block_length.unwrap_or(cfg.mean_block_length),
                n_boot: n_boot.unwrap_or(cfg.n_boot),
            };
            if !(significance > 0.0 && significance < 1.0) {
                return Err(Error::Config("significance: must lie in (0, 1)".into()));
            }
            let ranking = patton_rank(&records, &baseline, &losses, &dm, significance, cfg.master_seed)?;
            write_ranking(out, &ranking)?;
            Ok(())
        }
        Command::Forecast {
            series,
            column,
            filters,
            window,
        } => forecast(&series, &column, &filters, window, out),
        Command::Plotdata { aggregate, svg } => {
            let path = aggregate.unwrap_or_else(|| out.join("aggregate.csv"));
            let rows = read_aggregate(&path)?;
            emit_plotdata(&rows, &out.join("plotdata"), svg)?;
            Ok(())
        }
    }
}

/// Parses user-supplied tags, reporting failures as configuration errors.
fn parse_all<T>(flag: &str, raw: &[String], parse: fn(&str) -> ttsv::Result<T>) -> ttsv::Result<Vec<T>> {
    raw.iter()
        .map(|s| {
            parse(s).map_err(|e| match e {
                Error::Config(_) => e,
                other => Error::Config(format!("{flag}: {other}")),
            })
        })
        .collect()
}

fn simulate(cfg: &ExperimentConfig, noise: &str, out: &Path) -> ttsv::Result<()> {
    let kind = NoiseKind::parse(noise).map_err(|e| Error::Config(format!("noise: {e}")))?;
    let spec = cfg.noise_spec(kind);
    let sim = cfg.sim_config()?;
    let seed = cfg.master_seed;
    let days: Vec<(u64, TickSeries, TruthRow)> = (0..cfg.days as u64)
        .into_par_iter()
        .map(|day| {
            let panel = simulate_day(&sim, seed, day)?;
            let ticks = match kind {
                NoiseKind::None => panel.ticks_clean.clone(),
                _ => panel.observe(&spec, seed)?,
            };
            let truth = TruthRow {
                day,
                n_ticks: ticks.len(),
                iv: panel.iv,
                riv: panel.riv,
                iq: panel.iq,
            };
            Ok((day, ticks, truth))
        })
        .collect::<ttsv::Result<_>>()?;
    let refs: Vec<(u64, &TickSeries)> = days.iter().map(|(d, t, _)| (*d, t)).collect();
    write_ticks(&out.join("ticks.csv"), &refs)?;
    let truth: Vec<TruthRow> = days.into_iter().map(|(_, _, t)| t).collect();
    write_rows(&out.join("truth.csv"), &truth)
}

fn forecast(series: &Path, column: &str, filters: &[String], window: usize, out: &Path) -> ttsv::Result<()> {
    let filters: Vec<(&str, &str)> = filters
        .iter()
        .map(|f| {
            f.split_once('=')
                .ok_or_else(|| Error::Config(format!("filter: expected name=value, got '{f}'")))
        })
        .collect::<ttsv::Result<_>>()?;
    let file = std::fs::File::open(series).map_err(|e| Error::Io {
        path: series.to_path_buf(),
        source: e,
    })?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = rdr.headers()?.clone();
    let missing = |name: &str| Error::Data {
        path: series.to_path_buf(),
        line: 1,
        msg: format!("missing column '{name}'"),
    };
    let c_value = headers.iter().position(|h| h == column).ok_or_else(|| missing(column))?;
    let c_day = headers.iter().position(|h| h == "day");
    let c_filters: Vec<(usize, &str)> = filters
        .iter()
        .map(|(name, value)| {
            headers
                .iter()
                .position(|h| h == *name)
                .map(|i| (i, *value))
                .ok_or_else(|| missing(name))
        })
        .collect::<ttsv::Result<_>>()?;

    let mut days = Vec::new();
    let mut values = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if !c_filters.iter().all(|(i, v)| rec.get(*i) == Some(*v)) {
            continue;
        }
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |msg: String| Error::Data {
            path: series.to_path_buf(),
            line,
            msg,
        };
        let raw = rec.get(c_value).unwrap_or("");
        let v: f64 = raw.parse().map_err(|_| bad(format!("bad {column} '{raw}'")))?;
        let day = match c_day {
            Some(i) => {
                let raw = rec.get(i).unwrap_or("");
                raw.parse().map_err(|_| bad(format!("bad day '{raw}'")))?
            }
            None => k as u64,
        };
        days.push(day);
        values.push(v);
    }
    let forecasts = rolling_forecast(&values, window)?;
    let rows: Vec<ForecastRow> = forecasts
        .iter()
        .enumerate()
        .map(|(k, f)| ForecastRow {
            day: days[window + k],
            target: values[window + k],
            forecast: *f,
        })
        .collect();
    write_rows(&out.join("forecasts.csv"), &rows)
}
