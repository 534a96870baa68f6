//! x–y tables for external plotting.

use inclusion_core::io::Table;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlotKind {
    /// `log h` against `log |f|`.
    Probe,
    /// `d_H` against `|ln 𝒥|^{−η}` and `|ln aperture|^{−η}`.
    Sweep { eta: f64 },
}

fn column(table: &Table, name: &str) -> Result<Vec<f64>, CliError> {
    table.column(name).ok_or_else(|| CliError::Config(format!("table has no numeric column '{name}'")))
}

/// Transformed copy of a probe or sweep table.
pub fn emit_plotdata(table: &Table, kind: PlotKind) -> Result<Table, CliError> {
    if table.is_empty() {
        return Err(CliError::Config("cannot emit plot data from an empty table".into()));
    }
    match kind {
        PlotKind::Probe => {
            let h = column(table, "h")?;
            let f = column(table, "abs_f")?;
            let mut out = Table::new(&["log_h", "log_abs_f"]);
            for (h, f) in h.iter().zip(&f) {
                out.push_numbers(&[h.ln(), f.ln()])?;
            }
            Ok(out)
        }
        PlotKind::Sweep { eta } => {
            if !(eta > 0.0) {
                return Err(CliError::Config("eta must be positive".into()));
            }
            let d = column(table, "d_h")?;
            let m = column(table, "misfit")?;
            let a = column(table, "aperture")?;
            let x = |t: f64| t.ln().abs().powf(-eta);
            let mut out = Table::new(&["d_h", "misfit", "aperture", "x_misfit", "x_aperture"]);
            for i in 0..d.len() {
                out.push_numbers(&[d[i], m[i], a[i], x(m[i]), x(a[i])])?;
            }
            Ok(out)
        }
    }
}
