use serde::{Deserialize, Serialize};

use super::aperture::{bump_basis, cauchy_aperture, CauchyDataSet, TraceNorm};
use super::misfit::{misfit, PoleGrid};
use super::Configuration;
use crate::exec::Execution;
use crate::fit::pearson;
use crate::geometry::{hausdorff_distance, modified_distance, AugmentedDomain, InclusionShape, ShapeKind};
use crate::media::MediumSpec;
use crate::solver::SolverOptions;
use crate::{Error, Result};

/// Exponents scanned when fitting `d_H` against `|log t|^{−η}`.
pub const ETA_GRID: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// Dilations of a base shape, ordered so that they approach the base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFamily {
    pub base: ShapeKind,
    pub factors: Vec<f64>,
}

impl SweepFamily {
    pub fn validate(&self) -> Result<()> {
        if self.factors.len() < 5 {
            return Err(Error::invalid("sweep family needs at least five members"));
        }
        if self.factors.iter().any(|&f| !(f > 0.0)) {
            return Err(Error::invalid("dilation factors must be positive"));
        }
        let gap: Vec<f64> = self.factors.iter().map(|f| (f - 1.0).abs()).collect();
        if gap.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::invalid("sweep family is not monotone toward the base shape"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub trial: usize,
    pub factor: f64,
    pub d_h: f64,
    pub d_mu: f64,
    pub misfit: f64,
    pub aperture: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaFit {
    pub eta: f64,
    pub corr: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub misfit_fit: Option<EtaFit>,
    pub aperture_fit: Option<EtaFit>,
}

impl SweepResult {
    /// True when `d_H`, misfit and aperture all strictly decrease along the
    /// family.
    pub fn monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].d_h < w[0].d_h && w[1].misfit < w[0].misfit && w[1].aperture < w[0].aperture)
    }
}

/// Best Pearson correlation of `d` against `|ln t|^{−η}` over [`ETA_GRID`].
/// Rows with `t` outside `(0, 1)` are skipped.
pub fn fit_eta(d: &[f64], t: &[f64]) -> Option<EtaFit> {
    let keep: Vec<usize> = (0..d.len().min(t.len())).filter(|&i| t[i] > 0.0 && t[i] < 1.0).collect();
    let x: Vec<f64> = keep.iter().map(|&i| d[i]).collect();
    ETA_GRID
        .iter()
        .filter_map(|&eta| {
            let y: Vec<f64> = keep.iter().map(|&i| t[i].ln().abs().powf(-eta)).collect();
            pearson(&x, &y).map(|corr| EtaFit { eta, corr })
        })
        .fold(None, |best: Option<EtaFit>, e| match best {
            Some(b) if b.corr >= e.corr => Some(b),
            _ => Some(e),
        })
}

/// One row per dilation: Hausdorff and modified distances of the masks,
/// the misfit and the Cauchy-data aperture against the base inclusion.
#[allow(clippy::too_many_arguments)]
pub fn stability_sweep(
    aug: &AugmentedDomain,
    spec: &MediumSpec,
    family: &SweepFamily,
    dy: &PoleGrid,
    dz: &PoleGrid,
    options: SolverOptions,
    exec: Execution,
) -> Result<SweepResult> {
    family.validate()?;
    let grid = aug.grid();
    let base_shape = InclusionShape::rasterize(family.base.clone(), grid)?;
    let base = Configuration::new(aug, spec, base_shape, options, exec)?;
    let norm = TraceNorm::new(aug.omega_grid(), &aug.sigma)?;
    let inputs = bump_basis(aug.omega_grid(), &aug.sigma);
    let base_data = CauchyDataSet::build(aug, &base.medium, inputs.clone(), norm.clone(), options, exec)?;
    let mut rows = Vec::with_capacity(family.factors.len());
    for (trial, &factor) in family.factors.iter().enumerate() {
        let shape = InclusionShape::rasterize(family.base.dilated(factor)?, grid)?;
        let d_h = hausdorff_distance(grid, &base.inclusion.mask, &shape.mask, exec)?;
        let d_mu = modified_distance(grid, &aug.omega, &base.inclusion.mask, &shape.mask, exec)?;
        let cfg = Configuration::new(aug, spec, shape, options, exec)?;
        let m = misfit(aug, &base, &cfg, dy, dz)?;
        let data = CauchyDataSet::build(aug, &cfg.medium, inputs.clone(), norm.clone(), options, exec)?;
        let ap = cauchy_aperture(&base_data, &data)?;
        rows.push(SweepRow { trial, factor, d_h, d_mu, misfit: m.value, aperture: ap.value });
    }
    let d: Vec<f64> = rows.iter().map(|r| r.d_h).collect();
    let mis: Vec<f64> = rows.iter().map(|r| r.misfit).collect();
    let ap: Vec<f64> = rows.iter().map(|r| r.aperture).collect();
    Ok(SweepResult { misfit_fit: fit_eta(&d, &mis), aperture_fit: fit_eta(&d, &ap), rows })
}
