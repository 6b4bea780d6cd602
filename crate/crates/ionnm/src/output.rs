use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::config::Format;
use crate::error::{CliError, Result};

/// Shortest rendering with 12 significant digits, like `%.12g`.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..12).contains(&exp) {
        trim(format!("{x:.*}", (11 - exp) as usize))
    } else {
        format!("{}e{exp}", trim(mantissa.to_string()))
    }
}

fn trim(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => sig12(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            // Non-finite numbers become null.
            Cell::Num(x) => json!(x),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
        }
    }
}

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// CSV gets the settings as `# key = value` lines above the header.
    pub fn write_to(&self, w: impl Write, echo: &[(&str, String)], format: Format) -> Result<()> {
        let mut w = BufWriter::new(w);
        let io_err = |e| CliError::io("<output>", e);
        match format {
            Format::Csv => {
                writeln!(w, "# ionnm {}", env!("CARGO_PKG_VERSION")).map_err(io_err)?;
                for (k, v) in echo {
                    writeln!(w, "# {k} = {v}").map_err(io_err)?;
                }
                let mut csv = csv::Writer::from_writer(w);
                csv.write_record(&self.columns)?;
                for row in &self.rows {
                    csv.write_record(row.iter().map(Cell::csv))?;
                }
                csv.flush().map_err(io_err)?;
            }
            Format::Json => {
                let config: Map<String, Value> = echo.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
                let rows: Vec<Value> = self.rows.iter().map(|r| r.iter().map(Cell::json).collect()).collect();
                let doc = json!({
                    "ionnm": env!("CARGO_PKG_VERSION"),
                    "config": config,
                    "columns": self.columns,
                    "rows": rows,
                });
                serde_json::to_writer(&mut w, &doc)?;
                writeln!(w).map_err(io_err)?;
                w.flush().map_err(io_err)?;
            }
        }
        Ok(())
    }

    /// Writes to `path`, or to standard output when there is none.
    pub fn write(&self, path: Option<&Path>, echo: &[(&str, String)], format: Format) -> Result<()> {
        match path {
            None => self.write_to(io::stdout().lock(), echo, format),
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
                }
                let f = File::create(p).map_err(|e| CliError::io(p, e))?;
                self.write_to(f, echo, format).map_err(|e| match e {
                    CliError::Io { source, .. } => CliError::io(p, source),
                    e => e,
                })
            }
        }
    }
}

pub fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}
