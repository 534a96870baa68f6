use num_complex::Complex64 as C;

use super::forms::f_from_fields;
use super::Configuration;
use crate::exec::Execution;
use crate::fit::{loglog_fit, LinearFit};
use crate::geometry::Point;
use crate::{Error, Result};

/// `|f|` at or below this level is treated as identically zero.
pub const DEGENERATE_F: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ProbeResult {
    pub origin: Point,
    pub normal: Point,
    /// Strictly decreasing offsets.
    pub h: Vec<f64>,
    pub f: Vec<C>,
    /// Fit of `log|f|` against `log h` over the smallest decade of `h`;
    /// `None` when every `|f|` is degenerate.
    pub fit: Option<LinearFit>,
}

impl ProbeResult {
    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }
}

/// Evaluates `f(y_h, y_h)` at `y_h = O + hν` for each offset and fits the
/// blow-up exponent.
pub fn probe_scan(truth: &Configuration, trial: &Configuration, origin: Point, normal: Point, h: &[f64], exec: Execution) -> Result<ProbeResult> {
    if h.len() < 2 {
        return Err(Error::invalid("probe needs at least two offsets"));
    }
    if h.iter().any(|&v| !(v > 0.0)) || h.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::invalid("probe offsets must be positive and strictly decreasing"));
    }
    let len = (normal[0] * normal[0] + normal[1] * normal[1] + normal[2] * normal[2]).sqrt();
    if !(len > 0.0) {
        return Err(Error::invalid("probe direction is zero"));
    }
    let nu = normal.map(|v| v / len);
    let grid = truth.solver().grid().clone();
    let poles: Vec<Point> = h.iter().map(|&t| [0, 1, 2].map(|a| origin[a] + t * nu[a])).collect();
    for p in &poles {
        let inside = grid.locate(*p).is_some_and(|c| truth.medium.chi()[c] || trial.medium.chi()[c]);
        if inside {
            return Err(Error::invalid(format!("probe pole {p:?} enters the inclusion")));
        }
    }
    let f = exec
        .map(&poles, |&y| -> Result<C> {
            let g1 = truth.green(y)?;
            let g2 = trial.green(y)?;
            Ok(f_from_fields(&truth.medium, &trial.medium, &g1, &g2)?.f)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let fit = if f.iter().all(|v| v.norm() <= DEGENERATE_F) {
        None
    } else {
        let h_min = h[h.len() - 1];
        let (hs, fs): (Vec<f64>, Vec<f64>) =
            h.iter().zip(&f).filter(|(t, _)| **t <= 10.0 * h_min * (1.0 + 1e-12)).map(|(t, v)| (*t, v.norm())).unzip();
        Some(loglog_fit(&hs, &fs)?)
    };
    Ok(ProbeResult { origin, normal: nu, h: h.to_vec(), f, fit })
}
