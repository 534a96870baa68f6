//! Least-squares lines and correlation coefficients.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub n: usize,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::invalid("fit inputs differ in length"));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::invalid("fit needs at least two points"));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("fit abscissae are all equal"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    Ok(LinearFit { slope, intercept, residual: (ss / n as f64).sqrt(), n })
}

/// Fits `log v` against `log r`, skipping non-positive or non-finite pairs.
pub fn loglog_fit(r: &[f64], v: &[f64]) -> Result<LinearFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = r
        .iter()
        .zip(v)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && a.is_finite() && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .unzip();
    linear_fit(&lx, &ly)
}

/// Pearson correlation; `None` when either sample has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Radial binning: geometric-mean radius and max value per logarithmic bin.
pub fn log_bins(r: &[f64], v: &[f64], lo: f64, hi: f64, bins: usize) -> (Vec<f64>, Vec<f64>) {
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut acc = vec![(0.0, 0usize, 0.0f64); bins];
    for (&ri, &vi) in r.iter().zip(v) {
        if ri < lo || ri > hi || !(vi > 0.0) {
            continue;
        }
        let t = ((ri.ln() - llo) / (lhi - llo) * bins as f64).floor() as usize;
        let b = &mut acc[t.min(bins - 1)];
        b.0 += ri.ln();
        b.1 += 1;
        b.2 += vi.ln();
    }
    acc.into_iter().filter(|b| b.1 > 0).map(|b| ((b.0 / b.1 as f64).exp(), (b.2 / b.1 as f64).exp())).unzip()
}
