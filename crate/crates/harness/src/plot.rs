//! SVG plots derived purely from the CSV files written by the other
//! subcommands.

use crate::error::{HarnessError, Result};
use crate::table::Table;
use plotters::prelude::*;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq)]
pub struct PlotSummary {
    pub path: PathBuf,
    /// Axis ranges in data coordinates (after any log transform).
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub points: usize,
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi == lo {
        let d = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        return (lo - d, hi + d);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn draw_err(path: &Path) -> impl Fn(String) -> HarnessError + '_ {
    move |e| HarnessError::format(path, format!("plotting failed: {e}"))
}

enum Style {
    Line,
    Bars,
}

fn chart(
    path: &Path,
    title: &str,
    labels: (&str, &str),
    xs: &[f64],
    ys: &[f64],
    style: Style,
) -> Result<PlotSummary> {
    let fail = draw_err(path);
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| (*x, *y))
        .collect();
    let x_range = match style {
        Style::Line => padded_range(pts.iter().map(|p| p.0)),
        Style::Bars => (0.0, pts.len().max(1) as f64 + 1.0),
    };
    let y_range = match style {
        Style::Line => padded_range(pts.iter().map(|p| p.1)),
        Style::Bars => (0.0, padded_range(pts.iter().map(|p| p.1)).1.max(1e-300)),
    };
    {
        let root = SVGBackend::new(path, (900, 500)).into_drawing_area();
        root.fill(&WHITE).map_err(|e| fail(e.to_string()))?;
        let mut c = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(15)
            .x_label_area_size(45)
            .y_label_area_size(80)
            .build_cartesian_2d(x_range.0..x_range.1, y_range.0..y_range.1)
            .map_err(|e| fail(e.to_string()))?;
        c.configure_mesh()
            .x_desc(labels.0)
            .y_desc(labels.1)
            .draw()
            .map_err(|e| fail(e.to_string()))?;
        match style {
            Style::Line => {
                c.draw_series(LineSeries::new(pts.iter().copied(), &BLUE))
                    .map_err(|e| fail(e.to_string()))?;
            }
            Style::Bars => {
                c.draw_series(pts.iter().enumerate().map(|(i, &(_, y))| {
                    let x = i as f64 + 1.0;
                    Rectangle::new([(x - 0.35, 0.0), (x + 0.35, y)], BLUE.filled())
                }))
                .map_err(|e| fail(e.to_string()))?;
            }
        }
        root.present().map_err(|e| fail(e.to_string()))?;
    }
    Ok(PlotSummary {
        path: path.to_path_buf(),
        x_range,
        y_range,
        points: pts.len(),
    })
}

/// Plots one CSV file into `out`, choosing the plot kind from its columns:
/// a time series gives one line plot per quantity, a spectrum a
/// log-power plot, a burst table a bar chart of inter-burst intervals and
/// a convergence table a log-log error plot.
pub fn plot_file(input: &Path, out: &Path) -> Result<Vec<PlotSummary>> {
    let table = Table::read(input)?;
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "plot".into());
    let target = |suffix: &str| out.join(format!("{stem}{suffix}.svg"));
    let mut plots = Vec::new();

    if table.has_column("frequency") && table.has_column("power") {
        let f = table.column("frequency")?;
        let p = table.column("power")?;
        let peak = p.iter().cloned().fold(0.0f64, f64::max);
        let floor = if peak > 0.0 { peak * 1e-16 } else { f64::MIN_POSITIVE };
        let logp: Vec<f64> = p.iter().map(|v| v.max(floor).log10()).collect();
        plots.push(chart(&target(""), "power spectral density", ("frequency", "log10 power"), &f, &logp, Style::Line)?);
    } else if table.has_column("onset") && table.has_column("interval_to_next") {
        let gaps: Vec<f64> = table
            .column("interval_to_next")?
            .into_iter()
            .filter(|v| v.is_finite())
            .collect();
        let idx: Vec<f64> = (1..=gaps.len()).map(|i| i as f64).collect();
        plots.push(chart(&target("_intervals"), "time between bursts", ("burst", "interval"), &idx, &gaps, Style::Bars)?);
    } else if table.has_column("dt") && table.has_column("err_omega") {
        let dt: Vec<f64> = table.column("dt")?.iter().map(|v| v.log10()).collect();
        for col in ["err_omega", "err_psi"] {
            if table.has_column(col) {
                let e: Vec<f64> = table.column(col)?.iter().map(|v| v.log10()).collect();
                plots.push(chart(&target(&format!("_{col}")), col, ("log10 dt", &format!("log10 {col}")), &dt, &e, Style::Line)?);
            }
        }
    } else if table.has_column("t") {
        let t = table.column("t")?;
        for col in table.columns.iter().filter(|c| *c != "t" && *c != "step") {
            let y = table.column(col)?;
            plots.push(chart(&target(&format!("_{col}")), col, ("t", col), &t, &y, Style::Line)?);
        }
    } else {
        return Err(HarnessError::schema(
            input,
            format!("unrecognised columns: {}", table.columns.join(", ")),
        ));
    }
    Ok(plots)
}
