//! Proxy-based ranking of sampling schemes against a baseline.
//!
//! For every (asset, estimator, M) cell the loss of each scheme is compared
//! day by day with the loss of the baseline scheme. The differential
//! `loss(baseline) − loss(scheme)` is positive when the scheme does better.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::dm::{dm_test, DmConfig};
use super::loss::{LossFunction, LossRecord};
use crate::error::{Error, Result};
use crate::rng::stream;

pub const DEFAULT_SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingCell {
    pub asset: String,
    pub estimator: String,
    #[serde(rename = "M")]
    pub m: usize,
    pub scheme: String,
    pub baseline: String,
    pub loss: String,
    pub n: usize,
    pub mean_diff: f64,
    pub p_value: f64,
}

/// Share of cells, in percent, where the scheme is significantly better
/// (`pct_sig_pos`) or worse (`pct_sig_neg`) than the baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingSummary {
    #[serde(skip)]
    pub estimator: String,
    pub scheme: String,
    pub baseline: String,
    pub loss: String,
    pub pct_sig_pos: f64,
    pub pct_sig_neg: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Ranking {
    pub cells: Vec<RankingCell>,
    pub summary: Vec<RankingSummary>,
}

impl Ranking {
    /// Summary rows of one estimator.
    pub fn summary_for<'a>(&'a self, estimator: &'a str) -> impl Iterator<Item = &'a RankingSummary> + 'a {
        self.summary.iter().filter(move |s| s.estimator == estimator)
    }

    pub fn estimators(&self) -> Vec<String> {
        let mut v: Vec<String> = self.summary.iter().map(|s| s.estimator.clone()).collect();
        v.dedup();
        v
    }
}

type CellKey = (String, String, usize);

pub fn patton_rank(
    records: &[LossRecord],
    baseline: &str,
    losses: &[LossFunction],
    dm: &DmConfig,
    significance: f64,
    seed: u64,
) -> Result<Ranking> {
    if !records.iter().any(|r| r.scheme == baseline) {
        return Err(Error::MissingInput(format!("baseline scheme '{baseline}' has no records")));
    }
    let mut groups: BTreeMap<CellKey, BTreeMap<&str, BTreeMap<u64, &LossRecord>>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.asset.clone(), r.estimator.clone(), r.m))
            .or_default()
            .entry(r.scheme.as_str())
            .or_default()
            .insert(r.day, r);
    }

    struct Job<'a> {
        key: &'a CellKey,
        scheme: &'a str,
        loss: LossFunction,
        diff: Vec<f64>,
    }
    let mut jobs = Vec::new();
    for (key, schemes) in &groups {
        let Some(base) = schemes.get(baseline) else {
            continue;
        };
        for (scheme, days) in schemes {
            if *scheme == baseline {
                continue;
            }
            for &loss in losses {
                let diff: Vec<f64> = days
                    .iter()
                    .filter_map(|(day, rec)| {
                        let b = loss.of(base.get(day)?)?;
                        let s = loss.of(rec)?;
                        Some(b - s)
                    })
                    .collect();
                jobs.push(Job {
                    key,
                    scheme,
                    loss,
                    diff,
                });
            }
        }
    }

    let cells: Vec<RankingCell> = jobs
        .par_iter()
        .enumerate()
        .filter(|(_, job)| job.diff.len() >= 10)
        .map(|(i, job)| {
            let res = dm_test(&job.diff, dm, &mut stream(seed, i as u64))?;
            Ok(RankingCell {
                asset: job.key.0.clone(),
                estimator: job.key.1.clone(),
                m: job.key.2,
                scheme: job.scheme.to_string(),
                baseline: baseline.to_string(),
                loss: job.loss.tag().to_string(),
                n: res.n,
                mean_diff: res.mean_diff,
                p_value: res.p_value,
            })
        })
        .collect::<Result<_>>()?;

    let mut tally: BTreeMap<(String, String, String), (usize, usize, usize)> = BTreeMap::new();
    for c in &cells {
        let t = tally
            .entry((c.estimator.clone(), c.loss.clone(), c.scheme.clone()))
            .or_default();
        t.0 += 1;
        if c.p_value < significance && c.mean_diff > 0.0 {
            t.1 += 1;
        }
        if c.p_value < significance && c.mean_diff < 0.0 {
            t.2 += 1;
        }
    }
    let summary = tally
        .into_iter()
        .map(|((estimator, loss, scheme), (n, pos, neg))| RankingSummary {
            estimator,
            scheme,
            baseline: baseline.to_string(),
            loss,
            pct_sig_pos: 100.0 * pos as f64 / n as f64,
            pct_sig_neg: 100.0 * neg as f64 / n as f64,
        })
        .collect();
    Ok(Ranking { cells, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records(scheme: &str, factor: f64, days: u64) -> Vec<LossRecord> {
        (0..days)
            .map(|d| {
                let proxy = 1.0 + 0.1 * (d % 5) as f64;
                let est = proxy * (1.0 + factor * (0.2 + 0.05 * (d % 3) as f64));
                LossRecord::new(d, "sim", "rv", scheme, 78, est, proxy)
            })
            .collect()
    }

    #[test]
    fn baseline_must_exist() {
        let r = records("rbts", 1.0, 20);
        assert!(matches!(
            patton_rank(&r, "cts", &[LossFunction::Mse], &DmConfig::default(), 0.05, 1),
            Err(Error::MissingInput(_))
        ));
    }

    #[test]
    fn copy_of_baseline_is_never_significant() {
        let mut r = records("cts", 1.0, 50);
        r.extend(records("copy", 1.0, 50));
        let out = patton_rank(&r, "cts", &LossFunction::ALL, &DmConfig::default(), 0.05, 1).unwrap();
        assert_eq!(out.summary.len(), 2);
        for s in &out.summary {
            assert_eq!((s.pct_sig_pos, s.pct_sig_neg), (0.0, 0.0));
        }
    }

    #[test]
    fn better_scheme_is_significantly_positive() {
        let mut r = records("cts", 2.0, 200);
        r.extend(records("rbts", 1.0, 200));
        let out = patton_rank(&r, "cts", &LossFunction::ALL, &DmConfig::default(), 0.05, 1).unwrap();
        for s in &out.summary {
            assert_eq!(s.pct_sig_pos, 100.0, "{s:?}");
        }
        assert!(out.cells.iter().all(|c| c.mean_diff > 0.0));
    }
}
