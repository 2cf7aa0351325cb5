//! SVG plots of summary tables and single-stream traces.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use plotters::prelude::*;

use super::output::SummaryRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    FdrVsPi1,
    PowerVsPi1,
    WealthTrace,
    AlphaTrace,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] =
        [PlotKind::FdrVsPi1, PlotKind::PowerVsPi1, PlotKind::WealthTrace, PlotKind::AlphaTrace];

    pub fn as_str(&self) -> &'static str {
        match self {
            PlotKind::FdrVsPi1 => "fdr_vs_pi1",
            PlotKind::PowerVsPi1 => "power_vs_pi1",
            PlotKind::WealthTrace => "wealth_trace",
            PlotKind::AlphaTrace => "alpha_trace",
        }
    }

    /// Reads a summary table rather than a transcript.
    pub fn is_summary(&self) -> bool {
        matches!(self, PlotKind::FdrVsPi1 | PlotKind::PowerVsPi1)
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlotKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "unknown plot kind `{s}` (fdr_vs_pi1 | power_vs_pi1 | wealth_trace | alpha_trace)"
            ))
        })
    }
}

/// A named polyline with highlighted points.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Indices into `points` drawn as markers.
    pub markers: Vec<usize>,
}

/// Groups summary rows into one series per procedure and epsilon (plus s,
/// theta_alt or model when those vary), ordered by first appearance.
pub fn summary_series(records: &[SummaryRecord], kind: PlotKind) -> Vec<Series> {
    let varies = |f: &dyn Fn(&SummaryRecord) -> Option<String>| {
        records.iter().filter_map(f).collect::<std::collections::BTreeSet<_>>().len() > 1
    };
    let show_s = varies(&|r| r.s.map(|s| s.to_string()));
    let show_theta = varies(&|r| Some(r.theta_alt.to_string()));
    let show_model = varies(&|r| Some(r.model.clone()));

    let mut keys: Vec<String> = Vec::new();
    let mut series: Vec<Series> = Vec::new();
    for r in records {
        let mut label = r.procedure.clone();
        if let Some(eps) = r.epsilon {
            label.push_str(&format!(" eps={eps}"));
        }
        if show_s {
            if let Some(s) = r.s {
                label.push_str(&format!(" s={s}"));
            }
        }
        if show_theta {
            label.push_str(&format!(" theta={}", r.theta_alt));
        }
        if show_model {
            label = format!("{} {label}", r.model);
        }
        let y = match kind {
            PlotKind::PowerVsPi1 => r.mean_power,
            _ => r.mean_fdr,
        };
        let idx = match keys.iter().position(|k| *k == label) {
            Some(i) => i,
            None => {
                keys.push(label.clone());
                series.push(Series { label, points: Vec::new(), markers: Vec::new() });
                keys.len() - 1
            }
        };
        if y.is_finite() {
            series[idx].points.push((r.pi1, y));
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
        s.markers = (0..s.points.len()).collect();
    }
    series.retain(|s| !s.points.is_empty());
    series
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

/// Renders `series` to an SVG file.
pub fn render(
    series: &[Series],
    title: &str,
    x_label: &str,
    y_label: &str,
    y_range: Option<(f64, f64)>,
    path: &Path,
) -> Result<()> {
    if series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::EmptySeries(format!("{title}: no data points")));
    }
    let all = || series.iter().flat_map(|s| s.points.iter());
    let (x0, x1) =
        padded(all().map(|p| p.0).fold(f64::INFINITY, f64::min), all().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max));
    let (y0, y1) = y_range.unwrap_or_else(|| {
        padded(all().map(|p| p.1).fold(f64::INFINITY, f64::min), all().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max))
    });
    let plot_err = |e: &dyn std::fmt::Display| Error::Plot(format!("{}: {e}", path.display()));

    let root = SVGBackend::new(path, (900, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(15)
        .x_label_area_size(45)
        .y_label_area_size(70)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(|e| plot_err(&e))?;
    chart.configure_mesh().x_desc(x_label).y_desc(y_label).draw().map_err(|e| plot_err(&e))?;

    for (i, s) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(s.points.iter().copied(), color.stroke_width(2)))
            .map_err(|e| plot_err(&e))?
            .label(s.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
        chart
            .draw_series(s.markers.iter().filter_map(|&m| s.points.get(m)).map(|&p| Circle::new(p, 4, color.filled())))
            .map_err(|e| plot_err(&e))?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .position(SeriesLabelPosition::UpperRight)
        .draw()
        .map_err(|e| plot_err(&e))?;
    root.present().map_err(|e| plot_err(&e))?;
    Ok(())
}

/// FDR or power against pi1, one series per procedure and epsilon.
pub fn plot_summary(records: &[SummaryRecord], kind: PlotKind, path: &Path) -> Result<()> {
    let (title, y) = match kind {
        PlotKind::FdrVsPi1 => ("FDR vs fraction of non-nulls", "FDR"),
        PlotKind::PowerVsPi1 => ("Power vs fraction of non-nulls", "power"),
        other => return Err(Error::InvalidParameter(format!("{other} plots a transcript, not a summary table"))),
    };
    let series = summary_series(records, kind);
    render(&series, title, "pi1", y, Some((0.0, 1.05)), path)
}

/// Per-step traces (wealth or alpha_t) with rejections marked.
pub fn plot_traces(series: &[Series], kind: PlotKind, path: &Path) -> Result<()> {
    let (title, y) = match kind {
        PlotKind::WealthTrace => ("Wealth vs hypothesis index", "wealth"),
        PlotKind::AlphaTrace => ("Rejection threshold vs hypothesis index", "alpha_t"),
        other => return Err(Error::InvalidParameter(format!("{other} plots a summary table, not a transcript"))),
    };
    render(series, title, "hypothesis index t", y, None, path)
}
