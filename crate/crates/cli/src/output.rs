use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use dilab::suite::RunReport;
use dilab::Point;

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// A CSV table with a header row.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Trace {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Trace {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match c {
                    Cell::Num(v) => write!(out, "{}", format_num(*v)).expect("write to string"),
                    Cell::Text(s) => out.push_str(s),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn point_header(prefix: &str, dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("{prefix}{i}")).collect()
}

pub fn point_cells(p: &Point) -> Vec<Cell> {
    p.iter().map(|&v| Cell::Num(v)).collect()
}

pub fn records_trace(r: &RunReport) -> Trace {
    let mut t = Trace::new(["name", "status", "residual"]);
    for rec in &r.records {
        t.push(vec![
            rec.name.clone().into(),
            rec.status.to_string().into(),
            rec.residual.into(),
        ]);
    }
    t
}

/// Writes `<stem>.json` and `<stem>.csv` into `dir`, returning both paths.
pub fn emit_report(r: &RunReport, trace: &Trace, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let json = dir.join(format!("{stem}.json"));
    let csv = dir.join(format!("{stem}.csv"));
    fs::write(&json, r.to_json() + "\n").with_context(|| format!("writing {}", json.display()))?;
    fs::write(&csv, trace.to_csv()).with_context(|| format!("writing {}", csv.display()))?;
    Ok((json, csv))
}
