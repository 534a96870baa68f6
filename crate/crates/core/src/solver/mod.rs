//! Finite-volume discretization and sparse complex linear solves.
//!
//! Grids up to [`SolverOptions::direct_max_unknowns`] unknowns are factored
//! with a sparse LU; larger systems use BiCGStab preconditioned by ILU(0).
//! Both paths enforce the same relative residual.

mod assemble;
mod csr;
mod direct;
mod krylov;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use assemble::{assemble, DiscreteOperator, Impedance, SYMMETRY_TOL};
pub use csr::CsrMatrix;
pub use direct::DirectSolver;
pub use krylov::{bicgstab, Ilu0, KrylovReport};

use crate::exec::Execution;
use crate::geometry::{AugmentedDomain, Dir, Face, Grid, Point};
use crate::media::MediumField;
use crate::{Error, Result};

type C = Complex64;

/// Complex value per grid cell; zero on inactive cells.
#[derive(Debug, Clone)]
pub struct ComplexField {
    grid: Arc<Grid>,
    values: Vec<C>,
}

impl ComplexField {
    pub fn new(grid: Arc<Grid>, values: Vec<C>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::invalid("field length does not match grid"));
        }
        if values.iter().any(|z| !z.is_finite()) {
            return Err(Error::Breakdown("non-finite field value".into()));
        }
        Ok(ComplexField { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.n_cells();
        ComplexField { grid, values: vec![C::new(0.0, 0.0); n] }
    }

    /// Samples `f` at the centers of active cells.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(Point) -> C) -> Self {
        let values = (0..grid.n_cells())
            .map(|c| if grid.is_active(c) { f(grid.center(c)) } else { C::new(0.0, 0.0) })
            .collect();
        ComplexField { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[C] {
        &self.values
    }

    pub fn get(&self, c: usize) -> C {
        self.values[c]
    }

    /// Value of the cell containing `p`.
    pub fn at(&self, p: Point) -> Option<C> {
        self.grid.locate(p).filter(|&c| self.grid.is_active(c)).map(|c| self.values[c])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn abs_values(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Auto,
    Direct,
    Iterative,
}

fn d_method() -> Method {
    Method::Auto
}
fn d_max() -> usize {
    48_000
}
fn d_pivot() -> f64 {
    1e-13
}
fn d_tol() -> f64 {
    1e-9
}
fn d_iter() -> usize {
    5000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    #[serde(default = "d_method")]
    pub method: Method,
    /// Largest system factored directly under [`Method::Auto`].
    #[serde(default = "d_max")]
    pub direct_max_unknowns: usize,
    /// Reciprocal condition estimate below which the direct path reports
    /// the eigenvalue regime.
    #[serde(default = "d_pivot")]
    pub pivot_threshold: f64,
    /// Relative residual contract for both paths.
    #[serde(default = "d_tol")]
    pub tolerance: f64,
    #[serde(default = "d_iter")]
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            method: d_method(),
            direct_max_unknowns: d_max(),
            pivot_threshold: d_pivot(),
            tolerance: d_tol(),
            max_iterations: d_iter(),
        }
    }
}

#[derive(Debug)]
enum Backend {
    Direct(DirectSolver),
    Iterative(Ilu0),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveReport {
    pub relative_residual: f64,
    pub iterations: usize,
}

/// An operator together with its factorization or preconditioner.
#[derive(Debug)]
pub struct LinearSystem {
    op: DiscreteOperator,
    backend: Backend,
    options: SolverOptions,
    rcond: Option<f64>,
    exec: Execution,
}

fn rel_residual(a: &CsrMatrix, x: &[C], b: &[C], exec: Execution) -> (Vec<C>, f64) {
    let ax = a.matvec(x, exec);
    let r: Vec<C> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let bn = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let rn = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    (r, if bn == 0.0 { rn } else { rn / bn })
}

impl LinearSystem {
    pub fn new(op: DiscreteOperator, options: SolverOptions, exec: Execution) -> Result<Self> {
        let direct = match options.method {
            Method::Direct => true,
            Method::Iterative => false,
            Method::Auto => op.n_rows() <= options.direct_max_unknowns,
        };
        if direct {
            let lu = DirectSolver::factor(op.matrix())?;
            let rcond = 1.0 / (op.matrix().norm1() * lu.inverse_norm1_estimate());
            if !(rcond >= options.pivot_threshold) {
                return Err(Error::EigenvalueRegime(format!(
                    "reciprocal condition estimate {rcond:.3e} below threshold {:.1e}",
                    options.pivot_threshold
                )));
            }
            Ok(LinearSystem { op, backend: Backend::Direct(lu), options, rcond: Some(rcond), exec })
        } else {
            let ilu = Ilu0::new(op.matrix())?;
            Ok(LinearSystem { op, backend: Backend::Iterative(ilu), options, rcond: None, exec })
        }
    }

    pub fn operator(&self) -> &DiscreteOperator {
        &self.op
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    /// Reciprocal 1-norm condition estimate (direct path only).
    pub fn rcond(&self) -> Option<f64> {
        self.rcond
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.backend, Backend::Direct(_))
    }

    /// Solves for a row-ordered right-hand side.
    pub fn solve_rows(&self, b: &[C]) -> Result<(Vec<C>, SolveReport)> {
        let a = self.op.matrix();
        let tol = self.options.tolerance;
        match &self.backend {
            Backend::Direct(lu) => {
                let mut x = lu.solve(b);
                if x.iter().any(|z| !z.is_finite()) {
                    return Err(Error::EigenvalueRegime("non-finite solution from LU".into()));
                }
                let (mut r, mut rel) = rel_residual(a, &x, b, self.exec);
                let mut steps = 0;
                while rel > tol && steps < 3 {
                    let dx = lu.solve(&r);
                    x.iter_mut().zip(&dx).for_each(|(x, d)| *x += d);
                    (r, rel) = rel_residual(a, &x, b, self.exec);
                    steps += 1;
                }
                if !(rel <= tol) {
                    return Err(Error::EigenvalueRegime(format!("residual {rel:.3e} above {tol:.1e} after refinement")));
                }
                Ok((x, SolveReport { relative_residual: rel, iterations: steps }))
            }
            Backend::Iterative(ilu) => {
                let (x, rep) = bicgstab(a, ilu, b, None, tol, self.options.max_iterations, self.exec)?;
                let (_, rel) = rel_residual(a, &x, b, self.exec);
                if !(rel <= tol * 10.0) {
                    return Err(Error::Breakdown(format!("BiCGStab true residual {rel:.3e} above {tol:.1e}")));
                }
                Ok((x, SolveReport { relative_residual: rel, iterations: rep.iterations }))
            }
        }
    }

    /// Solves with source density `source` (per grid cell) and boundary
    /// data `data` (per boundary face).
    pub fn solve(&self, source: Option<&[C]>, data: Option<&[C]>) -> Result<(ComplexField, SolveReport)> {
        let b = self.op.rhs(source, data)?;
        let (x, rep) = self.solve_rows(&b)?;
        Ok((ComplexField::new(self.op.grid().clone(), self.op.scatter(&x))?, rep))
    }

    /// Discrete delta of unit mass at `cell`.
    pub fn solve_point_source(&self, cell: usize) -> Result<(ComplexField, SolveReport)> {
        let r = self.op.cell_row(cell).ok_or_else(|| Error::invalid("point source on an inactive cell"))?;
        let mut b = vec![C::new(0.0, 0.0); self.op.n_rows()];
        b[r] = C::new(1.0, 0.0);
        let (x, rep) = self.solve_rows(&b)?;
        Ok((ComplexField::new(self.op.grid().clone(), self.op.scatter(&x))?, rep))
    }

    /// Several row-ordered right-hand sides against one factorization.
    pub fn solve_many(&self, rhs: &[Vec<C>]) -> Result<Vec<(Vec<C>, SolveReport)>> {
        self.exec.map(rhs, |b| self.solve_rows(b)).into_iter().collect()
    }
}

/// One-shot solve of `op u = h³·rhs` with homogeneous boundary data.
pub fn solve(op: DiscreteOperator, rhs: &ComplexField) -> Result<ComplexField> {
    let sys = LinearSystem::new(op, SolverOptions::default(), Execution::default())?;
    Ok(sys.solve(Some(rhs.values()), None)?.0)
}

/// Trace and outward conormal flux on an ordered set of boundary faces.
#[derive(Debug, Clone)]
pub struct CauchyPair {
    pub faces: Vec<Face>,
    pub trace: Vec<C>,
    pub flux: Vec<C>,
}

/// Extracts the Cauchy pair of `u` on `faces`.
///
/// The trace is `known_trace` when given, otherwise a quadratic extrapolation
/// of the first three cells. The normal derivative uses the one-sided
/// second-order formula through the face value and two cells; tangential
/// conormal parts use centered differences in the first cell layer.
pub fn cauchy_pair(u: &ComplexField, medium: &MediumField, faces: &[Face], known_trace: Option<&[C]>) -> Result<CauchyPair> {
    let grid = u.grid();
    let h = grid.spacing();
    if let Some(t) = known_trace {
        if t.len() != faces.len() {
            return Err(Error::invalid("trace length does not match face set"));
        }
    }
    let mut trace = Vec::with_capacity(faces.len());
    let mut flux = Vec::with_capacity(faces.len());
    for (k, f) in faces.iter().enumerate() {
        let inward = f.dir.opposite();
        let c1 = f.cell;
        let c2 = grid.active_neighbor(c1, inward).ok_or_else(|| Error::invalid("body too thin for flux stencil"))?;
        let c3 = grid.active_neighbor(c2, inward).ok_or_else(|| Error::invalid("body too thin for flux stencil"))?;
        let (u1, u2, u3) = (u.get(c1), u.get(c2), u.get(c3));
        let uf = match known_trace {
            Some(t) => t[k],
            None => (u1 * 15.0 - u2 * 10.0 + u3 * 3.0) / 8.0,
        };
        let dn = (uf * 8.0 - u1 * 9.0 + u2) / (3.0 * h);
        let s = medium.effective_sigma(c1);
        let a = f.dir.axis;
        let mut g = s[a][a] * dn;
        for t in (0..3).filter(|&t| t != a && s[a][t] != 0.0) {
            let plus = grid.active_neighbor(c1, Dir::new(t, true));
            let minus = grid.active_neighbor(c1, Dir::new(t, false));
            let dt = match (plus, minus) {
                (Some(p), Some(m)) => (u.get(p) - u.get(m)) / (2.0 * h),
                (Some(p), None) => (u.get(p) - u1) / h,
                (None, Some(m)) => (u1 - u.get(m)) / h,
                (None, None) => C::new(0.0, 0.0),
            };
            g += s[a][t] * f.dir.sign() * dt;
        }
        trace.push(uf);
        flux.push(g);
    }
    Ok(CauchyPair { faces: faces.to_vec(), trace, flux })
}

/// Forward problem on Ω with data supported on Σ, factored once.
#[derive(Debug)]
pub struct DirichletProblem {
    system: LinearSystem,
    sigma: Vec<Face>,
    sigma_index: Vec<usize>,
    n_boundary: usize,
}

impl DirichletProblem {
    pub fn new(aug: &AugmentedDomain, medium: &MediumField, options: SolverOptions, exec: Execution) -> Result<Self> {
        let grid = aug.omega_grid();
        let op = assemble(grid, medium, Impedance::Plus, exec)?;
        let sigma_index = aug
            .sigma
            .iter()
            .map(|f| grid.boundary_face_index(*f).ok_or_else(|| Error::invalid("Σ face is not a boundary face")))
            .collect::<Result<Vec<_>>>()?;
        let n_boundary = grid.boundary_faces().len();
        Ok(DirichletProblem { system: LinearSystem::new(op, options, exec)?, sigma: aug.sigma.clone(), sigma_index, n_boundary })
    }

    pub fn system(&self) -> &LinearSystem {
        &self.system
    }

    pub fn sigma_faces(&self) -> &[Face] {
        &self.sigma
    }

    /// Solution for trace `f` on Σ (one value per Σ face), zero elsewhere.
    pub fn solve(&self, f: &[C]) -> Result<(ComplexField, SolveReport)> {
        if f.len() != self.sigma.len() {
            return Err(Error::invalid("trace length does not match Σ"));
        }
        let mut data = vec![C::new(0.0, 0.0); self.n_boundary];
        for (k, &i) in self.sigma_index.iter().enumerate() {
            data[i] = f[k];
        }
        self.system.solve(None, Some(&data))
    }
}

/// One-shot forward solve with Σ-supported data.
pub fn solve_dirichlet(aug: &AugmentedDomain, medium: &MediumField, f: &[C]) -> Result<ComplexField> {
    let p = DirichletProblem::new(aug, medium, SolverOptions::default(), Execution::default())?;
    Ok(p.solve(f)?.0)
}
