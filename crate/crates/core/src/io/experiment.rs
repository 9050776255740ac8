//! Monte Carlo driver: simulate days, sample them under every scheme and
//! frequency, estimate integrated variance and tabulate the errors.
//!
//! Evaluation day `e` is simulation day `window_days + e`, so the first
//! evaluation day already has a full window of past days for the rolling
//! curve estimates and any single cell is reproducible on its own.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;

use super::config::{ExperimentConfig, ProxyKind};
use super::tables::{write_aggregate, write_loss_table, AggregateRow};
use crate::error::{Error, Result};
use crate::estimators::{Estimator, PreAvgSpec};
use crate::eval::metrics::{relative_bias, relative_bias_se, relative_rmse};
use crate::eval::LossRecord;
use crate::intensity::{estimate_daily_curves, DailyCurves, KernelSpec, RollingEstimate};
use crate::sampling::{cts_grid, returns_from_grid, tick_variance_from_curve, SamplingGrid, Scheme};
use crate::sim::{simulate_day, spot_variance, DayPanel, NoiseKind, NoiseSpec, SimConfig, TickSeries};

/// Sampling schemes of the simulation study; `_true` variants use the
/// latent curves, `_rolling` variants the rolling averages of kernel
/// estimates over past days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentScheme {
    Cts,
    IttsTrue,
    IttsRolling,
    Rtts,
    IbtsTrue,
    IbtsRolling,
    RbtsTrue,
    RbtsRolling,
}

impl ExperimentScheme {
    pub const ALL: [ExperimentScheme; 8] = [
        ExperimentScheme::Cts,
        ExperimentScheme::IttsTrue,
        ExperimentScheme::IttsRolling,
        ExperimentScheme::Rtts,
        ExperimentScheme::IbtsTrue,
        ExperimentScheme::IbtsRolling,
        ExperimentScheme::RbtsTrue,
        ExperimentScheme::RbtsRolling,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ExperimentScheme::Cts => "cts",
            ExperimentScheme::IttsTrue => "itts_true",
            ExperimentScheme::IttsRolling => "itts_rolling",
            ExperimentScheme::Rtts => "rtts",
            ExperimentScheme::IbtsTrue => "ibts_true",
            ExperimentScheme::IbtsRolling => "ibts_rolling",
            ExperimentScheme::RbtsTrue => "rbts_true",
            ExperimentScheme::RbtsRolling => "rbts_rolling",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment scheme '{s}'")))
    }

    pub fn uses_rolling(self) -> bool {
        matches!(
            self,
            ExperimentScheme::IttsRolling | ExperimentScheme::IbtsRolling | ExperimentScheme::RbtsRolling
        )
    }
}

impl fmt::Display for ExperimentScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub records: Vec<LossRecord>,
    pub aggregate: Vec<AggregateRow>,
    /// Cells skipped because a day had too few ticks for the frequency.
    pub skipped_cells: usize,
    /// Grid points merged because they coincided with a neighbour.
    pub merged_grid_points: usize,
}

/// Estimate of one (day, noise, estimator, scheme, M) cell.
#[derive(Debug, Clone, Copy)]
struct Cell {
    eval_day: u64,
    noise: usize,
    estimator: usize,
    scheme: usize,
    m: usize,
    estimate: f64,
    iv: f64,
}

struct DayWork {
    day: u64,
    panel: DayPanel,
    observed: Vec<TickSeries>,
    curves: Vec<Option<DailyCurves>>,
}

struct Plan {
    sim: SimConfig,
    noise: Vec<NoiseSpec>,
    schemes: Vec<ExperimentScheme>,
    estimators: Vec<Estimator>,
    preavg: PreAvgSpec,
    kernel: KernelSpec,
    rolling: bool,
}

/// Runs the experiment on `threads` worker threads (0 = all cores).
pub fn run_experiment_with_threads(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("threads: {e}")))?;
    pool.install(|| run_experiment(cfg))
}

/// Runs the experiment on the current rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let schemes = cfg.scheme_list()?;
    let plan = Plan {
        sim: cfg.sim_config()?,
        noise: cfg
            .noise_kinds()?
            .into_iter()
            .map(|k| cfg.noise_spec(k))
            .collect(),
        rolling: schemes.iter().any(|s| s.uses_rolling()),
        schemes,
        estimators: cfg.estimator_list()?,
        preavg: cfg.preavg_spec(),
        kernel: cfg.kernel_spec(),
    };
    let burn = cfg.window_days as u64;
    let next_day = cfg.proxy == ProxyKind::NextDayRv;
    let first = if plan.rolling { 0 } else { burn };
    let end = burn + cfg.days as u64 + u64::from(next_day);

    let mut rolling: Vec<RollingEstimate> = plan
        .noise
        .iter()
        .map(|_| RollingEstimate::new(cfg.window_days))
        .collect::<Result<_>>()?;
    let mut cells: Vec<Cell> = Vec::new();
    let mut proxy_rv: Vec<Vec<f64>> = vec![Vec::new(); plan.noise.len()];
    let mut skipped = 0usize;
    let mut merged = 0usize;

    let mut start = first;
    while start < end {
        let stop = (start + cfg.chunk_days as u64).min(end);
        let work: Vec<DayWork> = (start..stop)
            .into_par_iter()
            .map(|day| prepare_day(&plan, cfg.master_seed, day))
            .collect::<Result<_>>()?;

        // Rolling curves for each day use only earlier days.
        let mut day_rolling: Vec<Vec<Option<DailyCurves>>> = Vec::with_capacity(work.len());
        for w in &work {
            let mut per_noise = Vec::with_capacity(plan.noise.len());
            for (k, r) in rolling.iter_mut().enumerate() {
                per_noise.push(if plan.rolling { r.averaged()? } else { None });
                if let Some(c) = &w.curves[k] {
                    r.push(c.clone());
                }
            }
            day_rolling.push(per_noise);
        }

        let results: Vec<(Vec<Cell>, usize, usize, Vec<f64>)> = work
            .par_iter()
            .zip(day_rolling.par_iter())
            .filter(|(w, _)| w.day >= burn)
            .map(|(w, roll)| evaluate_day(&plan, cfg, w, roll, burn))
            .collect::<Result<_>>()?;
        for (c, s, m, rv78) in results {
            cells.extend(c);
            skipped += s;
            merged += m;
            for (k, v) in rv78.into_iter().enumerate() {
                proxy_rv[k].push(v);
            }
        }
        start = stop;
    }

    let records: Vec<LossRecord> = cells
        .iter()
        .filter(|c| c.eval_day < cfg.days as u64)
        .map(|c| {
            let proxy = match cfg.proxy {
                ProxyKind::Iv => c.iv,
                ProxyKind::NextDayRv => proxy_rv[c.noise][c.eval_day as usize + 1],
            };
            LossRecord::new(
                c.eval_day,
                plan.noise[c.noise].kind.tag(),
                plan.estimators[c.estimator].tag(),
                plan.schemes[c.scheme].tag(),
                c.m,
                c.estimate,
                proxy,
            )
        })
        .collect();
    let aggregate = aggregate(&plan, cfg, &cells)?;
    Ok(ExperimentOutput {
        records,
        aggregate,
        skipped_cells: skipped,
        merged_grid_points: merged,
    })
}

fn prepare_day(plan: &Plan, seed: u64, day: u64) -> Result<DayWork> {
    let panel = simulate_day(&plan.sim, seed, day)?;
    let mut observed = Vec::with_capacity(plan.noise.len());
    let mut curves = Vec::with_capacity(plan.noise.len());
    for spec in &plan.noise {
        let ticks = panel.observe(spec, seed)?;
        curves.push(if plan.rolling && ticks.len() >= 2 {
            let kernel = KernelSpec {
                noise_adjust: spec.kind != NoiseKind::None,
                ..plan.kernel
            };
            Some(estimate_daily_curves(&ticks, &kernel)?)
        } else {
            None
        });
        observed.push(ticks);
    }
    Ok(DayWork {
        day,
        panel,
        observed,
        curves,
    })
}

/// Cells of one evaluation day, the counts of skipped cells and merged
/// grid points, and the 5-minute calendar-time RV of each noise setting.
fn evaluate_day(
    plan: &Plan,
    cfg: &ExperimentConfig,
    w: &DayWork,
    rolling: &[Option<DailyCurves>],
    burn: u64,
) -> Result<(Vec<Cell>, usize, usize, Vec<f64>)> {
    let eval_day = w.day - burn;
    let panel = &w.panel;
    let spot_true = spot_variance(&panel.lambda_curve, &panel.varsigma_curve)?;
    let mut cells = Vec::new();
    let mut skipped = 0;
    let mut merged = 0;
    let mut rv78 = Vec::with_capacity(plan.noise.len());

    for (k, ticks) in w.observed.iter().enumerate() {
        let tv_true = ticks.true_tick_variance().unwrap_or_default();
        let roll = rolling[k].as_ref();
        let tv_roll = roll.map(|r| tick_variance_from_curve(ticks, &r.varsigma2));
        rv78.push(crate::estimators::rv(&returns_from_grid(ticks, &cts_grid(ticks.day_length(), 78)?)));

        let mut grids: Vec<((usize, usize), Option<SamplingGrid>)> = Vec::new();
        for (ei, &est) in plan.estimators.iter().enumerate() {
            for (si, &scheme) in plan.schemes.iter().enumerate() {
                let input = match scheme {
                    ExperimentScheme::Cts => Some(Scheme::Cts),
                    ExperimentScheme::IttsTrue => Some(Scheme::Itts {
                        lambda: &panel.lambda_curve,
                    }),
                    ExperimentScheme::IbtsTrue => Some(Scheme::Ibts {
                        spot_variance: &spot_true,
                    }),
                    ExperimentScheme::Rtts => Some(Scheme::Rtts),
                    ExperimentScheme::RbtsTrue => Some(Scheme::Rbts {
                        tick_variance: &tv_true,
                    }),
                    ExperimentScheme::IttsRolling => roll.map(|r| Scheme::Itts { lambda: &r.lambda }),
                    ExperimentScheme::IbtsRolling => roll.map(|r| Scheme::Ibts {
                        spot_variance: &r.spot_variance,
                    }),
                    ExperimentScheme::RbtsRolling => tv_roll.as_deref().map(|tv| Scheme::Rbts { tick_variance: tv }),
                };
                let Some(input) = input else {
                    return Err(Error::InsufficientData(format!(
                        "no rolling curve estimate available on day {}",
                        w.day
                    )));
                };
                for &m in cfg.frequencies(est) {
                    let grid = match grids.iter().find(|(key, _)| *key == (si, m)) {
                        Some((_, g)) => g.clone(),
                        None => {
                            let g = match input.grid(ticks, m) {
                                Ok(g) => {
                                    merged += g.merged();
                                    Some(g)
                                }
                                Err(Error::InsufficientTicks { .. }) => None,
                                Err(e) => return Err(e),
                            };
                            grids.push(((si, m), g.clone()));
                            g
                        }
                    };
                    let Some(grid) = grid else {
                        skipped += 1;
                        continue;
                    };
                    let returns = returns_from_grid(ticks, &grid);
                    let estimate = match est.estimate(&returns, &plan.preavg) {
                        Ok(v) => v,
                        Err(Error::InsufficientData(_)) => {
                            skipped += 1;
                            continue;
                        }
                        Err(e) => return Err(e),
                    };
                    cells.push(Cell {
                        eval_day,
                        noise: k,
                        estimator: ei,
                        scheme: si,
                        m,
                        estimate,
                        iv: panel.iv,
                    });
                }
            }
        }
    }
    Ok((cells, skipped, merged, rv78))
}

/// (noise, estimator, scheme, M) -> (estimates, IVs).
type CellGroups = BTreeMap<(usize, usize, usize, usize), (Vec<f64>, Vec<f64>)>;

fn aggregate(plan: &Plan, cfg: &ExperimentConfig, cells: &[Cell]) -> Result<Vec<AggregateRow>> {
    let mut groups = CellGroups::new();
    for c in cells.iter().filter(|c| c.eval_day < cfg.days as u64) {
        let g = groups.entry((c.noise, c.estimator, c.scheme, c.m)).or_default();
        g.0.push(c.estimate);
        g.1.push(c.iv);
    }
    let mut rows = Vec::new();
    for (k, noise) in plan.noise.iter().enumerate() {
        for (ei, est) in plan.estimators.iter().enumerate() {
            for (si, scheme) in plan.schemes.iter().enumerate() {
                for &m in cfg.frequencies(*est) {
                    let Some((e, t)) = groups.get(&(k, ei, si, m)) else {
                        continue;
                    };
                    rows.push(AggregateRow {
                        noise: noise.kind.tag().to_string(),
                        estimator: est.tag().to_string(),
                        scheme: scheme.tag().to_string(),
                        m,
                        days: e.len(),
                        rel_bias: relative_bias(e, t)?,
                        rel_bias_se: relative_bias_se(e, t)?,
                        rel_rmse: relative_rmse(e, t)?,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Writes `loss_table.csv` and `aggregate.csv` into `dir`.
pub fn write_experiment(out: &ExperimentOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_loss_table(&dir.join("loss_table.csv"), &out.records)?;
    write_aggregate(&dir.join("aggregate.csv"), &out.aggregate)
}
