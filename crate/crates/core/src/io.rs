//! Text outputs: structured-grid dumps and CSV tables.
//!
//! A structured-grid file has a four-line header followed by one value per
//! line in linear cell order (x fastest, then y, then z):
//!
//! ```text
//! dims 16 16 22
//! origin 0 0 -0.375
//! spacing 0.0625
//! field abs_green config_hash=3f2a…
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::geometry::{Grid, Point};
use crate::{Error, Result};

pub fn format_scalar_grid(grid: &Grid, field: &str, values: &[f64], config_hash: Option<&str>) -> Result<String> {
    if values.len() != grid.n_cells() {
        return Err(Error::invalid("dump length does not match grid"));
    }
    if field.is_empty() || field.contains(char::is_whitespace) {
        return Err(Error::invalid("field name must be a single non-empty token"));
    }
    let [nx, ny, nz] = grid.dims();
    let o = grid.origin();
    let mut s = String::with_capacity(values.len() * 24 + 128);
    writeln!(s, "dims {nx} {ny} {nz}").unwrap();
    writeln!(s, "origin {} {} {}", o[0], o[1], o[2]).unwrap();
    writeln!(s, "spacing {}", grid.spacing()).unwrap();
    match config_hash {
        Some(h) => writeln!(s, "field {field} config_hash={h}").unwrap(),
        None => writeln!(s, "field {field}").unwrap(),
    }
    for v in values {
        writeln!(s, "{v}").unwrap();
    }
    Ok(s)
}

pub fn write_scalar_grid(path: &Path, grid: &Grid, field: &str, values: &[f64], config_hash: Option<&str>) -> Result<()> {
    fs::write(path, format_scalar_grid(grid, field, values, config_hash)?)?;
    Ok(())
}

/// Parsed structured-grid dump.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    pub dims: [usize; 3],
    pub origin: Point,
    pub spacing: f64,
    pub field: String,
    pub values: Vec<f64>,
}

pub fn parse_scalar_grid(text: &str) -> Result<ScalarGrid> {
    let mut lines = text.lines();
    let mut header = |key: &str| -> Result<Vec<String>> {
        let line = lines.next().ok_or_else(|| Error::invalid(format!("missing '{key}' header line")))?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(Error::invalid(format!("expected '{key}' header, found '{line}'")));
        }
        Ok(parts.map(str::to_string).collect())
    };
    let num = |s: &str| s.parse::<f64>().map_err(|_| Error::invalid(format!("bad number '{s}'")));
    let d = header("dims")?;
    let o = header("origin")?;
    let h = header("spacing")?;
    let f = header("field")?;
    if d.len() != 3 || o.len() != 3 || h.len() != 1 || f.is_empty() {
        return Err(Error::invalid("malformed structured-grid header"));
    }
    let dims = [0, 1, 2].map(|i| d[i].parse::<usize>().unwrap_or(0));
    let origin = [num(&o[0])?, num(&o[1])?, num(&o[2])?];
    let values = lines.map(num).collect::<Result<Vec<_>>>()?;
    if values.len() != dims[0] * dims[1] * dims[2] {
        return Err(Error::invalid("structured-grid value count does not match dims"));
    }
    Ok(ScalarGrid { dims, origin, spacing: num(&h[0])?, field: f[0].clone(), values })
}

/// A CSV table with a header row. Cells are preformatted strings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::invalid("row width does not match header"));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn push_numbers(&mut self, row: &[f64]) -> Result<()> {
        self.push(row.iter().map(|v| v.to_string()).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        self.rows.iter().map(|r| r[i].parse::<f64>().ok()).collect()
    }

    /// CSV text; a leading `# config_hash=…` comment line when a hash is given.
    pub fn to_csv(&self, config_hash: Option<&str>) -> String {
        let mut s = String::new();
        if let Some(h) = config_hash {
            writeln!(s, "# config_hash={h}").unwrap();
        }
        writeln!(s, "{}", self.columns.join(",")).unwrap();
        for r in &self.rows {
            writeln!(s, "{}", r.join(",")).unwrap();
        }
        s
    }

    pub fn write_csv(&self, path: &Path, config_hash: Option<&str>) -> Result<()> {
        fs::write(path, self.to_csv(config_hash))?;
        Ok(())
    }

    pub fn parse_csv(text: &str) -> Result<Table> {
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::invalid("empty CSV"))?;
        let mut t = Table { columns: header.split(',').map(str::to_string).collect(), rows: Vec::new() };
        for l in lines {
            t.push(l.split(',').map(str::to_string).collect())?;
        }
        Ok(t)
    }
}
