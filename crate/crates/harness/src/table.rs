//! Numeric CSV tables with `#`-prefixed `key: value` metadata lines.

use crate::error::{HarnessError, Result};
use mrsav_core::diagnostics::TimeSeries;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

/// Column order of the time-series file written by `simulate`.
pub const SERIES_COLUMNS: [&str; 10] = [
    "step",
    "t",
    "enstrophy",
    "palinstrophy",
    "omega_l2",
    "grad_omega_l2",
    "q",
    "abs_q_minus_1",
    "max_abs_omega",
    "mode_0_1_re",
];

/// Shortest round-trip text; exponent form only for very small or large
/// magnitudes.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e6).contains(&a) || !a.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub struct TableWriter {
    inner: Option<csv::Writer<BufWriter<File>>>,
    path: PathBuf,
}

fn csv_writer(buf: BufWriter<File>) -> csv::Writer<BufWriter<File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(buf)
}

impl TableWriter {
    pub fn create(path: &Path, metadata: &[(String, String)], columns: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
        let mut buf = BufWriter::new(file);
        for (k, v) in metadata {
            writeln!(buf, "# {k}: {v}").map_err(|e| HarnessError::io(path, e))?;
        }
        let mut inner = csv_writer(buf);
        inner.write_record(columns).map_err(|e| csv_err(path, e))?;
        Ok(TableWriter {
            inner: Some(inner),
            path: path.to_path_buf(),
        })
    }

    fn writer(&mut self) -> &mut csv::Writer<BufWriter<File>> {
        self.inner.as_mut().expect("writer is only taken inside comment")
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        let path = self.path.clone();
        self.writer().write_record(fields).map_err(|e| csv_err(&path, e))
    }

    /// Appends a `# text` line after the rows written so far.
    pub fn comment(&mut self, text: &str) -> Result<()> {
        let inner = self.inner.take().expect("writer is only taken inside comment");
        let mut buf = inner
            .into_inner()
            .map_err(|e| HarnessError::io(&self.path, std::io::Error::other(e.to_string())))?;
        let written = writeln!(buf, "# {text}").map_err(|e| HarnessError::io(&self.path, e));
        self.inner = Some(csv_writer(buf));
        written
    }

    pub fn flush(&mut self) -> Result<()> {
        let path = self.path.clone();
        self.writer().flush().map_err(|e| HarnessError::io(&path, e))
    }
}

fn csv_err(path: &Path, e: csv::Error) -> HarnessError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::io(path, io),
        other => HarnessError::format(path, format!("{other:?}")),
    }
}

/// A parsed numeric table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub path: PathBuf,
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Table> {
        let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
        let mut metadata = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| HarnessError::io(path, e))?;
            let Some(rest) = line.strip_prefix('#') else { break };
            if let Some((k, v)) = rest.split_once(':') {
                metadata.push((k.trim().to_string(), v.trim().to_string()));
            }
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| csv_err(path, e))?;
        let columns: Vec<String> = reader
            .headers()
            .map_err(|e| HarnessError::schema(path, e.to_string()))?
            .iter()
            .map(|s| s.trim().to_string())
            .collect();
        if columns.is_empty() || columns.iter().all(String::is_empty) {
            return Err(HarnessError::schema(path, "missing header row"));
        }
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| HarnessError::schema(path, e.to_string()))?;
            let row = rec
                .iter()
                .enumerate()
                .map(|(j, s)| {
                    s.trim().parse::<f64>().map_err(|_| {
                        HarnessError::schema(
                            path,
                            format!("row {}: column {:?} is not a number: {s:?}", i + 1, columns[j]),
                        )
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(HarnessError::schema(path, "table has no data rows"));
        }
        Ok(Table {
            path: path.to_path_buf(),
            metadata,
            columns,
            rows,
        })
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| {
                HarnessError::schema(
                    &self.path,
                    format!("no column {name:?} (columns: {})", self.columns.join(", ")),
                )
            })?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }

    /// `name` against the `t` column.
    pub fn series(&self, name: &str) -> Result<TimeSeries> {
        TimeSeries::new(name, self.column("t")?, self.column(name)?)
            .map_err(|e| HarnessError::schema(&self.path, e.to_string()))
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}
