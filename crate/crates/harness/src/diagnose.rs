//! Post-processing of a `series.csv`: spectrum, bursts and tail fractions.

use crate::config::DiagnosticsConfig;
use crate::error::{HarnessError, Result};
use crate::table::{fmt_f64, Table, TableWriter};
use mrsav_core::diagnostics::{
    default_burst_threshold, detect_bursts, periodogram, tail_probabilities, BurstReport,
    Periodogram,
};
use std::path::{Path, PathBuf};

pub const PSD_FILE: &str = "psd.csv";
pub const BURSTS_FILE: &str = "bursts.csv";
pub const TAILS_FILE: &str = "tails.csv";

#[derive(Clone, Debug)]
pub struct DiagnosticsReport {
    pub spectrum: Periodogram,
    pub bursts: BurstReport,
    pub burst_threshold: f64,
    pub tails: Vec<(f64, f64, f64)>,
    pub files: Vec<PathBuf>,
}

/// Reads `series`, analyses the post-spin-up samples and writes `psd.csv`,
/// `bursts.csv` and `tails.csv` into `out`.
pub fn run_diagnostics(series: &Path, cfg: &DiagnosticsConfig, out: &Path) -> Result<DiagnosticsReport> {
    let table = Table::read(series)?;
    let schema = |e: mrsav_core::Error| HarnessError::schema(series, e.to_string());
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let mut files = Vec::new();

    let psd_series = table.series(&cfg.psd_column)?.from_time(cfg.spin_up);
    let spectrum = periodogram(&psd_series, cfg.window.into()).map_err(schema)?;
    let psd_path = out.join(PSD_FILE);
    let meta = vec![
        ("source".to_string(), series.display().to_string()),
        ("column".to_string(), cfg.psd_column.clone()),
        ("spin_up".to_string(), fmt_f64(cfg.spin_up)),
        ("window".to_string(), spectrum.window.name().to_string()),
        ("sample_interval".to_string(), fmt_f64(spectrum.sample_interval)),
        ("normalisation".to_string(), "one-sided power per bin; sums to the variance without a window".to_string()),
    ];
    let mut w = TableWriter::create(&psd_path, &meta, &["frequency", "power"])?;
    for (f, p) in spectrum.frequencies.iter().zip(&spectrum.power) {
        w.row(&[fmt_f64(*f), fmt_f64(*p)])?;
    }
    w.flush()?;
    files.push(psd_path);

    let burst_series = table.series(&cfg.burst_column)?;
    let threshold = match cfg.burst_threshold {
        Some(t) => t,
        None => default_burst_threshold(&burst_series, cfg.spin_up).map_err(schema)?,
    };
    let bursts = detect_bursts(&burst_series.from_time(cfg.spin_up), threshold, cfg.burst_min_separation)
        .map_err(schema)?;
    let bursts_path = out.join(BURSTS_FILE);
    let meta = vec![
        ("source".to_string(), series.display().to_string()),
        ("column".to_string(), cfg.burst_column.clone()),
        ("spin_up".to_string(), fmt_f64(cfg.spin_up)),
        ("threshold".to_string(), fmt_f64(threshold)),
        ("min_separation".to_string(), fmt_f64(cfg.burst_min_separation)),
        ("events".to_string(), bursts.events.len().to_string()),
    ];
    let mut w = TableWriter::create(&bursts_path, &meta, &["onset", "end", "peak", "interval_to_next"])?;
    for (i, ev) in bursts.events.iter().enumerate() {
        let interval = bursts.intervals.get(i).map(|v| fmt_f64(*v)).unwrap_or_else(|| "nan".into());
        w.row(&[fmt_f64(ev.onset), fmt_f64(ev.end), fmt_f64(ev.peak), interval])?;
    }
    w.flush()?;
    files.push(bursts_path);

    let bands = cfg.bands();
    let probs = tail_probabilities(&table.series(&cfg.tail_column)?, &bands, cfg.spin_up).map_err(schema)?;
    let tails: Vec<(f64, f64, f64)> = bands.iter().zip(&probs).map(|(b, p)| (b.lo, b.hi, *p)).collect();
    let tails_path = out.join(TAILS_FILE);
    let meta = vec![
        ("source".to_string(), series.display().to_string()),
        ("column".to_string(), cfg.tail_column.clone()),
        ("spin_up".to_string(), fmt_f64(cfg.spin_up)),
    ];
    let mut w = TableWriter::create(&tails_path, &meta, &["lo", "hi", "probability"])?;
    for (lo, hi, p) in &tails {
        w.row(&[fmt_f64(*lo), fmt_f64(*hi), fmt_f64(*p)])?;
    }
    w.flush()?;
    files.push(tails_path);

    Ok(DiagnosticsReport {
        spectrum,
        bursts,
        burst_threshold: threshold,
        tails,
        files,
    })
}
