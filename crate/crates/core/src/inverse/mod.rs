//! Inverse-problem functionals: the boundary form `S_{U₀}` and its volume
//! version, the inclusion split `f = S₁ − S₂`, the misfit over exterior pole
//! grids, the aperture between discrete Cauchy data sets, the
//! singular-sources probe and the stability sweep.

mod aperture;
mod forms;
mod misfit;
mod probe;
mod sweep;

pub use aperture::{bump_basis, cauchy_aperture, subspace_aperture, Aperture, CauchyDataSet, TraceNorm, MIN_BASIS, RANK_TOL};
pub use forms::{f_eval, f_from_fields, form_difference, s_boundary, s_volume, sigma_trace, FValue, FaceRule, HALO_CELLS};
pub use misfit::{misfit, MisfitResult, PoleGrid};
pub use probe::{probe_scan, ProbeResult, DEGENERATE_F};
pub use sweep::{fit_eta, stability_sweep, EtaFit, SweepFamily, SweepResult, SweepRow, ETA_GRID};

use crate::exec::Execution;
use crate::geometry::{AugmentedDomain, InclusionShape, Point};
use crate::green::{GreenField, GreenSolver};
use crate::media::{build_medium, MediumField, MediumSpec};
use crate::solver::{Impedance, SolverOptions};
use crate::Result;

/// A medium on the augmented domain with its Green operator factored.
#[derive(Debug)]
pub struct Configuration {
    pub inclusion: InclusionShape,
    pub medium: MediumField,
    solver: GreenSolver,
}

impl Configuration {
    pub fn new(aug: &AugmentedDomain, spec: &MediumSpec, inclusion: InclusionShape, options: SolverOptions, exec: Execution) -> Result<Self> {
        let medium = build_medium(spec, aug, &inclusion)?;
        Self::from_medium(aug, medium, inclusion, options, exec)
    }

    pub fn from_medium(aug: &AugmentedDomain, medium: MediumField, inclusion: InclusionShape, options: SolverOptions, exec: Execution) -> Result<Self> {
        let solver = GreenSolver::new(aug, &medium, Impedance::Plus, options, exec)?;
        Ok(Configuration { inclusion, medium, solver })
    }

    pub fn solver(&self) -> &GreenSolver {
        &self.solver
    }

    pub fn green(&self, y: Point) -> Result<GreenField> {
        self.solver.green(y)
    }

    pub fn green_many(&self, poles: &[Point]) -> Result<Vec<GreenField>> {
        self.solver.green_many(poles)
    }
}
