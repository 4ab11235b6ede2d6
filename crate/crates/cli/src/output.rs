//! Tables and run metadata.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use ltvr_core::{LtvError, Result, C64};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const POLE: &str = "pole";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// A sampled value; `None` marks a pole or a non-finite sample.
pub type Cell = Option<f64>;

/// Evaluation result of one sample. Poles and non-finite values become
/// `None`; any other error is passed on.
pub fn cell(v: Result<C64>) -> Result<Option<C64>> {
    match v {
        Ok(z) if z.re.is_finite() && z.im.is_finite() => Ok(Some(z)),
        Ok(_) | Err(LtvError::Pole { .. }) | Err(LtvError::NonFinite { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Rows of `t` followed by real and imaginary parts of each quantity.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(quantities: &[&str]) -> Self {
        let mut columns = vec!["t".to_string()];
        for q in quantities {
            columns.push(format!("{q}_re"));
            columns.push(format!("{q}_im"));
        }
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, t: f64, values: &[Option<C64>]) {
        debug_assert_eq!(2 * values.len() + 1, self.columns.len());
        let mut row = vec![Some(t)];
        for v in values {
            row.push(v.map(|z| z.re));
            row.push(v.map(|z| z.im));
        }
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match c {
                    Some(x) => write!(out, "{x}").unwrap(),
                    None => out.push_str(POLE),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|c| c.map_or(json!(POLE), |x| json!(x))).collect())
            .collect();
        json!({ "columns": self.columns, "rows": rows })
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => format!("{}\n", serde_json::to_string_pretty(&self.to_json()).unwrap()),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Sibling metadata file: `out.csv` gives `out.meta.json`.
pub fn meta_path(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

pub fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

/// Write the table to `out` (stdout when absent) and, with `out`, the
/// metadata next to it.
pub fn emit(table: &Table, format: Format, out: Option<&Path>, meta: &Value) -> std::io::Result<()> {
    let body = table.render(format);
    match out {
        Some(path) => {
            std::fs::write(path, body)?;
            std::fs::write(meta_path(path), format!("{}\n", serde_json::to_string_pretty(meta).unwrap()))?;
            log::info!("wrote {} and {}", path.display(), meta_path(path).display());
        }
        None => std::io::stdout().lock().write_all(body.as_bytes())?,
    }
    Ok(())
}
