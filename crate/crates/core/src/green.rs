//! Green's functions on the augmented domain.
//!
//! `G(·, y)` solves `div(σ∇G) + qG = −δ_y` in Ω₀ with `G = 0` on
//! `∂Ω₀ \ Σ₀` and `σ∇G·ν + iG = 0` on Σ₀. The delta is a unit mass in the
//! cell containing `y`. Two routes are provided: a direct solve with the
//! full operator, and the recursive construction `G̃ + R₁ + … + R_{J+1}`
//! starting from the `q = 0` problem.

use std::sync::Arc;

use num_complex::Complex64;

use crate::exec::Execution;
use crate::fit::{log_bins, loglog_fit, LinearFit};
use crate::geometry::{dist, AugmentedDomain, Dir, Grid, Point};
use crate::media::MediumField;
use crate::solver::{assemble, ComplexField, Impedance, LinearSystem, SolveReport, SolverOptions};
use crate::{Error, Result, DIM};

type C = Complex64;

/// Cells closer than this many spacings to the pole are excluded from
/// every comparison and fit.
pub const POLE_HALO: f64 = 3.0;

/// Number of correction terms before the final solve: J = ⌊(n−1)/2⌋.
pub const RECURSION_DEPTH: usize = (DIM - 1) / 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Direct,
    Recursive,
}

#[derive(Debug, Clone)]
pub struct GreenField {
    pub pole: Point,
    pub pole_cell: usize,
    pub values: ComplexField,
    pub route: Route,
    pub report: SolveReport,
}

impl GreenField {
    pub fn grid(&self) -> &Arc<Grid> {
        self.values.grid()
    }

    /// Center of the pole cell, where the discrete delta sits.
    pub fn pole_center(&self) -> Point {
        self.grid().center(self.pole_cell)
    }

    pub fn get(&self, c: usize) -> C {
        self.values.get(c)
    }

    /// Distance of each cell center from the pole-cell center.
    pub fn radius(&self, c: usize) -> f64 {
        dist(self.grid().center(c), self.pole_center())
    }

    pub fn away_from_pole(&self, c: usize) -> bool {
        self.radius(c) >= POLE_HALO * self.grid().spacing() - 1e-12
    }

    /// Centered differences, one-sided next to inactive cells.
    pub fn gradient(&self) -> Vec<[C; 3]> {
        gradient(&self.values)
    }
}

/// Per-cell gradient of a field: centered where both neighbors are active,
/// one-sided otherwise, zero when isolated along an axis.
pub fn gradient(u: &ComplexField) -> Vec<[C; 3]> {
    let grid = u.grid();
    let h = grid.spacing();
    (0..grid.n_cells())
        .map(|c| {
            let mut g = [C::new(0.0, 0.0); 3];
            if !grid.is_active(c) {
                return g;
            }
            for (a, ga) in g.iter_mut().enumerate() {
                let p = grid.active_neighbor(c, Dir::new(a, true));
                let m = grid.active_neighbor(c, Dir::new(a, false));
                *ga = match (p, m) {
                    (Some(p), Some(m)) => (u.get(p) - u.get(m)) / (2.0 * h),
                    (Some(p), None) => (u.get(p) - u.get(c)) / h,
                    (None, Some(m)) => (u.get(c) - u.get(m)) / h,
                    (None, None) => C::new(0.0, 0.0),
                };
            }
            g
        })
        .collect()
}

pub fn gradient_norm(g: &[C; 3]) -> f64 {
    (g[0].norm_sqr() + g[1].norm_sqr() + g[2].norm_sqr()).sqrt()
}

/// Checks the pole precondition: inside an active cell, at distance ≥ 2h
/// from the boundary. Returns the pole cell.
pub fn pole_cell(grid: &Grid, y: Point) -> Result<usize> {
    let c = grid
        .locate(y)
        .filter(|&c| grid.is_active(c))
        .ok_or_else(|| Error::invalid(format!("pole {y:?} lies outside the domain")))?;
    let d = grid.distance_to_boundary(y);
    if d < 2.0 * grid.spacing() - 1e-12 {
        return Err(Error::invalid(format!("pole {y:?} is {d:.4} from the boundary (< 2h)")));
    }
    Ok(c)
}

/// One factorization of the Green operator, reused across poles.
#[derive(Debug)]
pub struct GreenSolver {
    system: LinearSystem,
    exec: Execution,
}

impl GreenSolver {
    pub fn new(aug: &AugmentedDomain, medium: &MediumField, impedance: Impedance, options: SolverOptions, exec: Execution) -> Result<Self> {
        Self::on_grid(aug.grid(), medium, impedance, options, exec)
    }

    /// Green operator on an arbitrary labeled grid.
    pub fn on_grid(grid: &Arc<Grid>, medium: &MediumField, impedance: Impedance, options: SolverOptions, exec: Execution) -> Result<Self> {
        let op = assemble(grid, medium, impedance, exec)?;
        Ok(GreenSolver { system: LinearSystem::new(op, options, exec)?, exec })
    }

    pub fn system(&self) -> &LinearSystem {
        &self.system
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.system.operator().grid()
    }

    pub fn green(&self, y: Point) -> Result<GreenField> {
        let c = pole_cell(self.grid(), y)?;
        let (values, report) = self.system.solve_point_source(c)?;
        Ok(GreenField { pole: y, pole_cell: c, values, route: Route::Direct, report })
    }

    /// Green's functions for several poles, solved concurrently.
    pub fn green_many(&self, poles: &[Point]) -> Result<Vec<GreenField>> {
        self.exec.map(poles, |&y| self.green(y)).into_iter().collect()
    }

    /// Pole solve with prescribed boundary data on Dirichlet faces.
    pub fn green_with_data(&self, y: Point, data: impl Fn(Point) -> C) -> Result<GreenField> {
        let grid = self.grid();
        let c = pole_cell(grid, y)?;
        let g: Vec<C> = grid.boundary_faces().iter().map(|b| data(grid.face_center(b.face))).collect();
        let mut src = vec![C::new(0.0, 0.0); grid.n_cells()];
        src[c] = C::new(1.0 / grid.cell_volume(), 0.0);
        let (values, report) = self.system.solve(Some(&src), Some(&g))?;
        Ok(GreenField { pole: y, pole_cell: c, values, route: Route::Direct, report })
    }
}

/// Direct route: one solve of the full impedance system.
pub fn green_direct(aug: &AugmentedDomain, medium: &MediumField, y: Point) -> Result<GreenField> {
    GreenSolver::new(aug, medium, Impedance::Plus, SolverOptions::default(), Execution::default())?.green(y)
}

/// The pieces of the recursive construction.
#[derive(Debug, Clone)]
pub struct RecursiveParts {
    pub g_tilde: ComplexField,
    /// R₁ … R_{J+1}.
    pub corrections: Vec<ComplexField>,
}

/// Recursive route, factoring the `q = 0` and full operators once.
#[derive(Debug)]
pub struct RecursiveGreenSolver {
    free: LinearSystem,
    full: LinearSystem,
    q: Vec<f64>,
}

impl RecursiveGreenSolver {
    pub fn new(aug: &AugmentedDomain, medium: &MediumField, options: SolverOptions, exec: Execution) -> Result<Self> {
        let grid = aug.grid();
        let free = LinearSystem::new(assemble(grid, &medium.without_potential(), Impedance::Plus, exec)?, options, exec)?;
        let full = LinearSystem::new(assemble(grid, medium, Impedance::Plus, exec)?, options, exec)?;
        let q = (0..grid.n_cells()).map(|c| if grid.is_active(c) { medium.effective_q(c) } else { 0.0 }).collect();
        Ok(RecursiveGreenSolver { free, full, q })
    }

    /// `R_j = ∫ q(z) G̃(·,z) R_{j−1}(z,y) dz` by midpoint quadrature for
    /// j ≤ J, then `R_{J+1}` from the full operator with source `q R_J`.
    ///
    /// The midpoint sum `Σ_z h³ q(z) G̃(x,z) R_{j−1}(z)` is evaluated as one
    /// solve of the `q = 0` system with source density `q R_{j−1}`, which
    /// equals the sum because the discrete `G̃` is symmetric in its
    /// arguments.
    pub fn parts(&self, y: Point) -> Result<(usize, RecursiveParts, SolveReport)> {
        let grid = self.free.operator().grid().clone();
        let c = pole_cell(&grid, y)?;
        let (g_tilde, mut report) = self.free.solve_point_source(c)?;
        let mut corrections = Vec::with_capacity(RECURSION_DEPTH + 1);
        let mut prev = g_tilde.clone();
        for j in 1..=RECURSION_DEPTH + 1 {
            let src: Vec<C> = prev.values().iter().zip(&self.q).map(|(r, q)| r * *q).collect();
            let system = if j <= RECURSION_DEPTH { &self.free } else { &self.full };
            let (r, rep) = system.solve(Some(&src), None)?;
            report.relative_residual = report.relative_residual.max(rep.relative_residual);
            report.iterations += rep.iterations;
            corrections.push(r.clone());
            prev = r;
        }
        Ok((c, RecursiveParts { g_tilde, corrections }, report))
    }

    pub fn green(&self, y: Point) -> Result<GreenField> {
        let (c, parts, report) = self.parts(y)?;
        let mut v = parts.g_tilde.values().to_vec();
        for r in &parts.corrections {
            v.iter_mut().zip(r.values()).for_each(|(a, b)| *a += b);
        }
        let values = ComplexField::new(parts.g_tilde.grid().clone(), v)?;
        Ok(GreenField { pole: y, pole_cell: c, values, route: Route::Recursive, report })
    }
}

pub fn green_recursive(aug: &AugmentedDomain, medium: &MediumField, y: Point) -> Result<GreenField> {
    RecursiveGreenSolver::new(aug, medium, SolverOptions::default(), Execution::default())?.green(y)
}

/// max |a − b| / max |b| over cells away from the pole of `b`.
pub fn relative_difference(a: &GreenField, b: &GreenField) -> f64 {
    let grid = b.grid();
    let (mut diff, mut scale): (f64, f64) = (0.0, 0.0);
    for c in (0..grid.n_cells()).filter(|&c| grid.is_active(c) && b.away_from_pole(c)) {
        diff = diff.max((a.get(c) - b.get(c)).norm());
        scale = scale.max(b.get(c).norm());
    }
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Reciprocity defect max over pairs of |G(x,y) − G(y,x)| / max(|G(x,y)|, 10⁻¹⁴).
pub fn check_symmetry(solver: &GreenSolver, poles: &[Point]) -> Result<f64> {
    if poles.len() < 2 {
        return Err(Error::invalid("symmetry check needs at least two poles"));
    }
    let h = solver.grid().spacing();
    for i in 0..poles.len() {
        for j in 0..i {
            if dist(poles[i], poles[j]) < 5.0 * h - 1e-12 {
                return Err(Error::invalid(format!("poles {i} and {j} are closer than 5h")));
            }
        }
    }
    let fields = solver.green_many(poles)?;
    let mut worst: f64 = 0.0;
    for (i, a) in fields.iter().enumerate() {
        for b in fields.iter().skip(i + 1) {
            let xy = b.get(a.pole_cell);
            let yx = a.get(b.pole_cell);
            worst = worst.max((xy - yx).norm() / xy.norm().max(1e-14));
        }
    }
    Ok(worst)
}

/// `sup |G(x,y)|·|x−y|^{n−2}` over cells away from the pole.
pub fn bound_certificate(g: &GreenField) -> f64 {
    let grid = g.grid();
    (0..grid.n_cells())
        .filter(|&c| grid.is_active(c) && g.away_from_pole(c))
        .map(|c| g.get(c).norm() * g.radius(c).powi(DIM as i32 - 2))
        .fold(0.0, f64::max)
}

/// Log-log fit of a per-cell magnitude against distance from the pole over
/// `[r_min, r_max]`, after geometric binning.
pub fn decay_fit(g: &GreenField, magnitude: &[f64], r_min: f64, r_max: f64, bins: usize) -> Result<LinearFit> {
    if r_max < r_min * 10f64.sqrt() {
        return Err(Error::invalid("fit window narrower than half a decade"));
    }
    let grid = g.grid();
    let cells: Vec<usize> = (0..grid.n_cells()).filter(|&c| grid.is_active(c) && g.away_from_pole(c)).collect();
    let r: Vec<f64> = cells.iter().map(|&c| g.radius(c)).collect();
    let v: Vec<f64> = cells.iter().map(|&c| magnitude[c]).collect();
    let (br, bv) = log_bins(&r, &v, r_min, r_max, bins);
    loglog_fit(&br, &bv)
}

/// Laplace kernel 1/(4π r) in three dimensions.
pub fn free_space_kernel(r: f64) -> f64 {
    1.0 / (4.0 * std::f64::consts::PI * r)
}
