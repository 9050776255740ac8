//! Per-panel plot data from an aggregate table: one tidy CSV per
//! (noise, estimator, metric) with columns `M,scheme,<metric>` and an
//! optional SVG line chart with one series per scheme.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::tables::{write_rows, AggregateRow};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    RelBias,
    RelRmse,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::RelBias, Metric::RelRmse];

    pub fn column(self) -> &'static str {
        match self {
            Metric::RelBias => "rel_bias",
            Metric::RelRmse => "rel_rmse",
        }
    }

    fn label(self) -> &'static str {
        match self {
            Metric::RelBias => "relative bias",
            Metric::RelRmse => "relative RMSE",
        }
    }

    fn of(self, row: &AggregateRow) -> f64 {
        match self {
            Metric::RelBias => row.rel_bias,
            Metric::RelRmse => row.rel_rmse,
        }
    }
}

/// Rows of one panel, ordered as in the aggregate table.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub noise: String,
    pub estimator: String,
    pub metric: Metric,
    pub points: Vec<(usize, String, f64)>,
}

impl Panel {
    pub fn file_stem(&self) -> String {
        format!("{}_{}_{}", self.metric.column(), self.estimator, self.noise)
    }

    /// Schemes in order of first appearance.
    pub fn schemes(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for (_, s, _) in &self.points {
            if !out.contains(&s.as_str()) {
                out.push(s);
            }
        }
        out
    }
}

pub fn panels(rows: &[AggregateRow]) -> Vec<Panel> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in rows {
        let key = (r.noise.clone(), r.estimator.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut out = Vec::new();
    for (noise, estimator) in keys {
        for metric in Metric::ALL {
            let points = rows
                .iter()
                .filter(|r| r.noise == noise && r.estimator == estimator)
                .map(|r| (r.m, r.scheme.clone(), metric.of(r)))
                .collect();
            out.push(Panel {
                noise: noise.clone(),
                estimator: estimator.clone(),
                metric,
                points,
            });
        }
    }
    out
}

#[derive(Serialize)]
struct BiasRow<'a> {
    #[serde(rename = "M")]
    m: usize,
    scheme: &'a str,
    rel_bias: f64,
}

#[derive(Serialize)]
struct RmseRow<'a> {
    #[serde(rename = "M")]
    m: usize,
    scheme: &'a str,
    rel_rmse: f64,
}

fn write_panel_csv(path: &Path, panel: &Panel) -> Result<()> {
    match panel.metric {
        Metric::RelBias => {
            let rows: Vec<BiasRow> = panel
                .points
                .iter()
                .map(|(m, s, v)| BiasRow {
                    m: *m,
                    scheme: s,
                    rel_bias: *v,
                })
                .collect();
            write_rows(path, &rows)
        }
        Metric::RelRmse => {
            let rows: Vec<RmseRow> = panel
                .points
                .iter()
                .map(|(m, s, v)| RmseRow {
                    m: *m,
                    scheme: s,
                    rel_rmse: *v,
                })
                .collect();
            write_rows(path, &rows)
        }
    }
}

/// Writes every panel's CSV (and SVG if requested) into `dir`.
pub fn emit_plotdata(rows: &[AggregateRow], dir: &Path, svg: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for panel in panels(rows) {
        let csv_path = dir.join(format!("{}.csv", panel.file_stem()));
        write_panel_csv(&csv_path, &panel)?;
        written.push(csv_path);
        if svg {
            let svg_path = dir.join(format!("{}.svg", panel.file_stem()));
            std::fs::write(&svg_path, render_svg(&panel)).map_err(|e| Error::io(&svg_path, e))?;
            written.push(svg_path);
        }
    }
    Ok(written)
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Line chart with a logarithmic frequency axis.
pub fn render_svg(panel: &Panel) -> String {
    let (width, height) = (640.0, 400.0);
    let (left, right, top, bottom) = (70.0, 150.0, 40.0, 50.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;

    let ms: BTreeSet<usize> = panel.points.iter().map(|p| p.0).collect();
    let (m_lo, m_hi) = (
        *ms.first().unwrap_or(&1) as f64,
        *ms.last().unwrap_or(&1) as f64,
    );
    let finite = panel.points.iter().map(|p| p.2).filter(|v| v.is_finite());
    let (mut y_lo, mut y_hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !y_lo.is_finite() {
        (y_lo, y_hi) = (0.0, 1.0);
    }
    if panel.metric == Metric::RelBias {
        y_lo = y_lo.min(0.0);
        y_hi = y_hi.max(0.0);
    } else {
        y_lo = 0.0;
    }
    if y_hi - y_lo < 1e-12 {
        y_hi = y_lo + 1.0;
    }
    let x_of = |m: f64| {
        if m_hi > m_lo {
            left + plot_w * (m.ln() - m_lo.ln()) / (m_hi.ln() - m_lo.ln())
        } else {
            left + plot_w / 2.0
        }
    };
    let y_of = |v: f64| top + plot_h * (1.0 - (v - y_lo) / (y_hi - y_lo));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{} ({}, noise: {})</text>"#,
        left + plot_w / 2.0,
        escape(panel.metric.label()),
        escape(&panel.estimator),
        escape(&panel.noise)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for &m in &ms {
        let x = x_of(m as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{m}</text>"#,
            top + plot_h,
            top + plot_h + 5.0,
            top + plot_h + 18.0
        );
    }
    for k in 0..=4 {
        let v = y_lo + (y_hi - y_lo) * k as f64 / 4.0;
        let y = y_of(v);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.2}" x2="{left}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{v:.4}</text>"#,
            left - 5.0,
            left - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">M</text>"#,
        left + plot_w / 2.0,
        height - 10.0
    );
    for (i, scheme) in panel.schemes().into_iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = panel
            .points
            .iter()
            .filter(|p| p.1 == scheme && p.2.is_finite())
            .map(|p| format!("{:.2},{:.2}", x_of(p.0 as f64), y_of(p.2)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = top + 15.0 + 18.0 * i as f64;
        let lx = left + plot_w + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 25.0,
            ly + 4.0,
            escape(scheme)
        );
    }
    s.push_str("</svg>\n");
    s
}
