//! CSV tables produced and consumed by the pipeline.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{LossRecord, Ranking, RankingCell};

/// Monte Carlo accuracy of one (noise, estimator, scheme, M) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub noise: String,
    pub estimator: String,
    pub scheme: String,
    #[serde(rename = "M")]
    pub m: usize,
    pub days: usize,
    pub rel_bias: f64,
    pub rel_bias_se: f64,
    pub rel_rmse: f64,
}

/// Latent quantities of one simulated day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub day: u64,
    pub n_ticks: usize,
    pub iv: f64,
    pub riv: f64,
    pub iq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub day: u64,
    pub target: f64,
    pub forecast: f64,
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| with_path(path, e))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes a header-only file when `rows` is empty.
pub fn write_rows_with_header<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    if rows.is_empty() {
        let mut w = csv::Writer::from_path(path).map_err(|e| with_path(path, e))?;
        w.write_record(header)?;
        return w.flush().map_err(|e| Error::io(path, e));
    }
    write_rows(path, rows)
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Data {
                path: path.to_path_buf(),
                line,
                msg: e.to_string(),
            }
        })?);
    }
    Ok(out)
}

pub const LOSS_TABLE_HEADER: [&str; 9] = [
    "day", "asset", "estimator", "scheme", "M", "estimate", "proxy", "mse", "qlike",
];

pub const AGGREGATE_HEADER: [&str; 8] = [
    "noise", "estimator", "scheme", "M", "days", "rel_bias", "rel_bias_se", "rel_rmse",
];

pub fn write_loss_table(path: &Path, records: &[LossRecord]) -> Result<()> {
    write_rows_with_header(path, &LOSS_TABLE_HEADER, records)
}

pub fn read_loss_table(path: &Path) -> Result<Vec<LossRecord>> {
    read_rows(path)
}

pub fn write_aggregate(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    write_rows_with_header(path, &AGGREGATE_HEADER, rows)
}

pub fn read_aggregate(path: &Path) -> Result<Vec<AggregateRow>> {
    read_rows(path)
}

/// Writes `ranking_<estimator>.csv` per estimator and `ranking_cells.csv`
/// into `dir`; returns the written paths.
pub fn write_ranking(dir: &Path, ranking: &Ranking) -> Result<Vec<std::path::PathBuf>> {
    let mut written = Vec::new();
    for est in ranking.estimators() {
        let path = dir.join(format!("ranking_{est}.csv"));
        let rows: Vec<_> = ranking.summary_for(&est).cloned().collect();
        write_rows(&path, &rows)?;
        written.push(path);
    }
    let cells_path = dir.join("ranking_cells.csv");
    write_rows_with_header::<RankingCell>(
        &cells_path,
        &["asset", "estimator", "M", "scheme", "baseline", "loss", "n", "mean_diff", "p_value"],
        &ranking.cells,
    )?;
    written.push(cells_path);
    Ok(written)
}

fn with_path(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Data {
            path: path.to_path_buf(),
            line: 0,
            msg: format!("{other:?}"),
        },
    }
}
