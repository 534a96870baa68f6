use std::sync::Arc;

use num_complex::Complex64;

use super::csr::CsrMatrix;
use crate::exec::Execution;
use crate::geometry::{Dir, Face, FaceLabel, Grid};
use crate::media::MediumField;
use crate::{Error, Result};

/// Relative tolerance on max |M_ij − M_ji| accepted after assembly.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Sign of the impedance term on Σ₀: σ∇u·ν ± i·u = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Impedance {
    Plus,
    Minus,
}

impl Impedance {
    fn unit(self) -> Complex64 {
        match self {
            Impedance::Plus => Complex64::new(0.0, 1.0),
            Impedance::Minus => Complex64::new(0.0, -1.0),
        }
    }
}

/// Cell-centered finite-volume discretization of −div(σ∇u) − qu, scaled
/// by the cell volume, on the active cells of a grid.
///
/// Normal fluxes use face transmissibilities `h·harmonic(σ_aa)`. Off-diagonal
/// tensor entries enter through the symmetric cell form
/// `Σ_c h³ σ_ij(c) D_i u(c) D_j v(c)` with centered differences `D_i`, so the
/// matrix is symmetric for any medium. Dirichlet and measurement faces take
/// prescribed data, impedance faces add `±i·h²·u` to the boundary cell.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    grid: Arc<Grid>,
    impedance: Impedance,
    row_cell: Vec<usize>,
    cell_row: Vec<usize>,
    matrix: CsrMatrix,
    /// `rhs[row] += coef · g[face]` for boundary data `g`.
    data_coupling: Vec<(usize, usize, f64)>,
}

const NONE: usize = usize::MAX;

/// One-sided pieces of a centered difference at a cell: cell coefficients
/// and boundary-data coefficients.
struct Stencil {
    cells: [(usize, f64); 3],
    n_cells: usize,
    data: [(usize, f64); 2],
    n_data: usize,
}

impl Stencil {
    fn new() -> Self {
        Stencil { cells: [(0, 0.0); 3], n_cells: 0, data: [(0, 0.0); 2], n_data: 0 }
    }
    fn add_cell(&mut self, c: usize, w: f64) {
        for e in self.cells[..self.n_cells].iter_mut() {
            if e.0 == c {
                e.1 += w;
                return;
            }
        }
        self.cells[self.n_cells] = (c, w);
        self.n_cells += 1;
    }
    fn add_data(&mut self, f: usize, w: f64) {
        self.data[self.n_data] = (f, w);
        self.n_data += 1;
    }
    fn coef(&self, c: usize) -> f64 {
        self.cells[..self.n_cells].iter().filter(|e| e.0 == c).map(|e| e.1).sum()
    }
}

fn harmonic(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

/// Builds the operator; fails on unlabeled boundary faces or an asymmetric
/// result.
pub fn assemble(grid: &Arc<Grid>, medium: &MediumField, impedance: Impedance, exec: Execution) -> Result<DiscreteOperator> {
    if medium.n_cells() != grid.n_cells() {
        return Err(Error::invalid("medium does not match grid"));
    }
    if let Some(b) = grid.boundary_faces().iter().find(|b| b.label == FaceLabel::Interior) {
        return Err(Error::invalid(format!("boundary face {:?} has no condition", b.face)));
    }
    let mut row_cell = Vec::with_capacity(grid.n_active());
    let mut cell_row = vec![NONE; grid.n_cells()];
    for c in 0..grid.n_cells() {
        if grid.is_active(c) {
            cell_row[c] = row_cell.len();
            row_cell.push(c);
        }
    }
    let h = grid.spacing();
    let vol = grid.cell_volume();

    // centered difference D_axis at cell c
    let stencil = |c: usize, axis: usize| -> Stencil {
        let mut s = Stencil::new();
        let w = 0.5 / h;
        for (positive, sign) in [(true, 1.0), (false, -1.0)] {
            let dir = Dir::new(axis, positive);
            match grid.active_neighbor(c, dir) {
                Some(nb) => s.add_cell(nb, sign * w),
                None => {
                    let face = Face { cell: c, dir };
                    let fi = grid.boundary_face_index(face).expect("boundary face");
                    match grid.boundary_faces()[fi].label {
                        FaceLabel::Impedance => s.add_cell(c, sign * w),
                        _ => {
                            s.add_cell(c, -sign * w);
                            s.add_data(fi, 2.0 * sign * w);
                        }
                    }
                }
            }
        }
        s
    };

    let rows: Vec<(Vec<(usize, Complex64)>, Vec<(usize, f64)>)> = exec.map_range(row_cell.len(), |r| {
        let c = row_cell[r];
        let sc = medium.effective_sigma(c);
        let mut entries: Vec<(usize, Complex64)> = Vec::with_capacity(13);
        let mut data: Vec<(usize, f64)> = Vec::new();
        let mut diag = Complex64::new(-medium.effective_q(c) * vol, 0.0);
        for dir in Dir::ALL {
            let a = dir.axis;
            match grid.active_neighbor(c, dir) {
                Some(nb) => {
                    let t = h * harmonic(sc[a][a], medium.effective_sigma(nb)[a][a]);
                    diag += t;
                    entries.push((cell_row[nb], Complex64::new(-t, 0.0)));
                }
                None => {
                    let face = Face { cell: c, dir };
                    let fi = grid.boundary_face_index(face).expect("boundary face");
                    match grid.boundary_faces()[fi].label {
                        FaceLabel::Impedance => diag += impedance.unit() * h * h,
                        _ => {
                            let t = 2.0 * h * sc[a][a];
                            diag += t;
                            data.push((fi, t));
                        }
                    }
                }
            }
        }
        // cross terms from cells whose stencils touch c
        let mut cells = vec![c];
        cells.extend(Dir::ALL.iter().filter_map(|&d| grid.active_neighbor(c, d)));
        for &k in &cells {
            let sk = medium.effective_sigma(k);
            for i in 0..3 {
                for j in 0..3 {
                    if i == j || sk[i][j] == 0.0 {
                        continue;
                    }
                    let w = stencil(k, j).coef(c);
                    if w == 0.0 {
                        continue;
                    }
                    let si = stencil(k, i);
                    let scale = vol * sk[i][j] * w;
                    for &(s, a) in &si.cells[..si.n_cells] {
                        entries.push((cell_row[s], Complex64::new(scale * a, 0.0)));
                    }
                    for &(f, a) in &si.data[..si.n_data] {
                        data.push((f, -scale * a));
                    }
                }
            }
        }
        entries.push((r, diag));
        (entries, data)
    });

    let mut mat_rows = Vec::with_capacity(rows.len());
    let mut data_coupling = Vec::new();
    for (r, (entries, data)) in rows.into_iter().enumerate() {
        mat_rows.push(entries);
        data_coupling.extend(data.into_iter().map(|(f, w)| (r, f, w)));
    }
    let matrix = CsrMatrix::from_rows(mat_rows);
    let asym = matrix.relative_asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::invalid(format!("assembled matrix is not symmetric (relative asymmetry {asym:e})")));
    }
    Ok(DiscreteOperator { grid: grid.clone(), impedance, row_cell, cell_row, matrix, data_coupling })
}

impl DiscreteOperator {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn impedance(&self) -> Impedance {
        self.impedance
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn n_rows(&self) -> usize {
        self.row_cell.len()
    }

    pub fn row_cell(&self, r: usize) -> usize {
        self.row_cell[r]
    }

    pub fn cell_row(&self, c: usize) -> Option<usize> {
        let r = self.cell_row[c];
        (r != NONE).then_some(r)
    }

    /// Right-hand side for source density `s` (per grid cell) and boundary
    /// data `g` (per boundary face, in grid boundary order).
    pub fn rhs(&self, source: Option<&[Complex64]>, data: Option<&[Complex64]>) -> Result<Vec<Complex64>> {
        let vol = self.grid.cell_volume();
        let mut b: Vec<Complex64> = match source {
            Some(s) => {
                if s.len() != self.grid.n_cells() {
                    return Err(Error::invalid("source length does not match grid"));
                }
                self.row_cell.iter().map(|&c| s[c] * vol).collect()
            }
            None => vec![Complex64::new(0.0, 0.0); self.n_rows()],
        };
        if let Some(g) = data {
            if g.len() != self.grid.boundary_faces().len() {
                return Err(Error::invalid("boundary data length does not match boundary faces"));
            }
            for &(r, f, w) in &self.data_coupling {
                b[r] += g[f] * w;
            }
        }
        Ok(b)
    }

    /// Row vector → per-cell vector (zeros off the active set).
    pub fn scatter(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.grid.n_cells()];
        for (r, &c) in self.row_cell.iter().enumerate() {
            out[c] = x[r];
        }
        out
    }

    /// Per-cell vector → row vector.
    pub fn gather(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.row_cell.iter().map(|&c| v[c]).collect()
    }
}
