//! Tick files with rows `day,time_seconds,log_price`, sorted by day and time.

use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::TickSeries;

#[derive(Debug, Clone, Default)]
pub struct TickIngest {
    pub days: Vec<(u64, TickSeries)>,
    /// Rows dropped because an earlier row of the same day had the same time.
    pub duplicates_collapsed: usize,
}

/// Reads a tick file. Repeated timestamps keep the last price of the run.
/// Each day's open level is its first observed price.
pub fn ingest_ticks(path: &Path, day_length: f64) -> Result<TickIngest> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_ticks(file, path, day_length)
}

pub fn read_ticks<R: std::io::Read>(reader: R, origin: &Path, day_length: f64) -> Result<TickIngest> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Data {
            path: origin.to_path_buf(),
            line: 1,
            msg: format!("missing column '{name}'"),
        })
    };
    let (c_day, c_time, c_price) = (col("day")?, col("time_seconds")?, col("log_price")?);

    let mut out = TickIngest::default();
    let mut current: Option<(u64, Vec<f64>, Vec<f64>)> = None;
    let finish = |cur: Option<(u64, Vec<f64>, Vec<f64>)>, out: &mut TickIngest| -> Result<()> {
        if let Some((day, times, prices)) = cur {
            let open = prices[0];
            out.days
                .push((day, TickSeries::new(times, prices, day_length)?.with_open_price(open)));
        }
        Ok(())
    };
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let data_err = |msg: String| Error::Data {
            path: origin.to_path_buf(),
            line,
            msg,
        };
        let field = |i: usize| rec.get(i).unwrap_or("");
        let day: u64 = field(c_day)
            .parse()
            .map_err(|_| data_err(format!("bad day '{}'", field(c_day))))?;
        let time: f64 = field(c_time)
            .parse()
            .map_err(|_| data_err(format!("bad time_seconds '{}'", field(c_time))))?;
        let price: f64 = field(c_price)
            .parse()
            .map_err(|_| data_err(format!("bad log_price '{}'", field(c_price))))?;
        if !(0.0..=day_length).contains(&time) {
            return Err(data_err(format!("time {time} outside [0, {day_length}]")));
        }
        if !price.is_finite() {
            return Err(data_err("log_price must be finite".into()));
        }
        match &mut current {
            Some((d, times, prices)) if *d == day => {
                let last = *times.last().expect("day has a tick");
                if time < last {
                    return Err(data_err(format!("time {time} precedes {last} within day {day}")));
                }
                if time == last {
                    *prices.last_mut().expect("day has a tick") = price;
                    out.duplicates_collapsed += 1;
                } else {
                    times.push(time);
                    prices.push(price);
                }
            }
            Some((d, _, _)) if *d > day => {
                return Err(data_err(format!("day {day} follows day {d}")));
            }
            _ => {
                finish(current.take(), &mut out)?;
                current = Some((day, vec![time], vec![price]));
            }
        }
    }
    finish(current, &mut out)?;
    Ok(out)
}

pub fn write_ticks(path: &Path, days: &[(u64, &TickSeries)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["day", "time_seconds", "log_price"])?;
    for (day, ticks) in days {
        for (t, p) in ticks.times().iter().zip(ticks.log_prices()) {
            w.write_record(&[day.to_string(), t.to_string(), p.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
