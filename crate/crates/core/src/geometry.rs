//! Grids, inclusion masks, the augmented domain and set distances.
//!
//! Everything is represented on a uniform Cartesian grid of cubic cells.
//! Sets (the body Ω, inclusions D, the attached box D₀) are boolean cell
//! masks sampled at cell centers, so every distance below is computed over
//! cell centers and carries an error budget of one grid spacing.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::{Error, Result};

pub type Point = [f64; 3];

/// Minimum accepted resolution for [`Grid::build`].
pub const MIN_RESOLUTION: usize = 8;

pub fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Outward direction of a cell face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dir {
    pub axis: usize,
    pub positive: bool,
}

impl Dir {
    pub const ALL: [Dir; 6] = [
        Dir { axis: 0, positive: false },
        Dir { axis: 0, positive: true },
        Dir { axis: 1, positive: false },
        Dir { axis: 1, positive: true },
        Dir { axis: 2, positive: false },
        Dir { axis: 2, positive: true },
    ];

    pub fn new(axis: usize, positive: bool) -> Self {
        Dir { axis, positive }
    }

    pub fn sign(self) -> f64 {
        if self.positive {
            1.0
        } else {
            -1.0
        }
    }

    pub fn opposite(self) -> Self {
        Dir { axis: self.axis, positive: !self.positive }
    }

    pub fn normal(self) -> Point {
        let mut n = [0.0; 3];
        n[self.axis] = self.sign();
        n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceLabel {
    Interior,
    Dirichlet,
    Impedance,
    Measurement,
}

/// A cell face, identified by its owner cell and outward direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Face {
    pub cell: usize,
    pub dir: Dir,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFace {
    pub face: Face,
    pub label: FaceLabel,
}

/// Uniform grid over a box with an active-cell mask and labeled boundary.
///
/// Linear cell index is `i + nx * (j + ny * k)`. A boundary face is a face
/// of an active cell whose neighbor is inactive or outside the box. Every
/// boundary face carries exactly one non-interior label.
#[derive(Debug, Clone)]
pub struct Grid {
    origin: Point,
    h: f64,
    dims: [usize; 3],
    active: Vec<bool>,
    boundary: Vec<BoundaryFace>,
    boundary_index: HashMap<Face, usize>,
}

impl Grid {
    /// Uniform grid over `[lo, hi]` with `resolution` cells across the
    /// shortest side. All cells active, all boundary faces Dirichlet.
    pub fn build(lo: Point, hi: Point, resolution: usize) -> Result<Grid> {
        if resolution < MIN_RESOLUTION {
            return Err(Error::invalid(format!(
                "resolution {resolution} below minimum {MIN_RESOLUTION}"
            )));
        }
        let ext: Vec<f64> = (0..3).map(|a| hi[a] - lo[a]).collect();
        if ext.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(Error::invalid("degenerate box (non-positive extent)"));
        }
        let h = ext.iter().cloned().fold(f64::INFINITY, f64::min) / resolution as f64;
        let mut dims = [0; 3];
        for a in 0..3 {
            let n = (ext[a] / h).round();
            if (n * h - ext[a]).abs() > 1e-9 * ext[a] {
                return Err(Error::invalid(format!(
                    "box extent {} along axis {a} is not a multiple of spacing {h}",
                    ext[a]
                )));
            }
            dims[a] = n as usize;
        }
        Ok(Grid::from_spacing(lo, h, dims))
    }

    /// Grid with explicit spacing and cell counts, all cells active.
    pub fn from_spacing(origin: Point, h: f64, dims: [usize; 3]) -> Grid {
        let n = dims[0] * dims[1] * dims[2];
        Grid::with_mask(origin, h, dims, vec![true; n])
    }

    fn with_mask(origin: Point, h: f64, dims: [usize; 3], active: Vec<bool>) -> Grid {
        let mut g = Grid {
            origin,
            h,
            dims,
            active,
            boundary: Vec::new(),
            boundary_index: HashMap::new(),
        };
        for c in 0..g.n_cells() {
            if !g.active[c] {
                continue;
            }
            for dir in Dir::ALL {
                let open = match g.neighbor(c, dir) {
                    Some(nb) => !g.active[nb],
                    None => true,
                };
                if open {
                    let face = Face { cell: c, dir };
                    g.boundary_index.insert(face, g.boundary.len());
                    g.boundary.push(BoundaryFace { face, label: FaceLabel::Dirichlet });
                }
            }
        }
        g
    }

    /// Same geometry with a different active set; labels reset to Dirichlet.
    pub fn restricted(&self, mask: &[bool]) -> Result<Grid> {
        if mask.len() != self.n_cells() {
            return Err(Error::invalid("mask length does not match grid"));
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::invalid("empty active mask"));
        }
        Ok(Grid::with_mask(self.origin, self.h, self.dims, mask.to_vec()))
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn n_cells(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn cell_volume(&self) -> f64 {
        self.h * self.h * self.h
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn is_active(&self, c: usize) -> bool {
        self.active[c]
    }

    pub fn n_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn ijk(&self, c: usize) -> [usize; 3] {
        let i = c % self.dims[0];
        let j = (c / self.dims[0]) % self.dims[1];
        let k = c / (self.dims[0] * self.dims[1]);
        [i, j, k]
    }

    pub fn center(&self, c: usize) -> Point {
        let [i, j, k] = self.ijk(c);
        [
            self.origin[0] + (i as f64 + 0.5) * self.h,
            self.origin[1] + (j as f64 + 0.5) * self.h,
            self.origin[2] + (k as f64 + 0.5) * self.h,
        ]
    }

    pub fn face_center(&self, face: Face) -> Point {
        let mut p = self.center(face.cell);
        p[face.dir.axis] += 0.5 * self.h * face.dir.sign();
        p
    }

    /// Neighbor inside the box, regardless of activity.
    pub fn neighbor(&self, c: usize, dir: Dir) -> Option<usize> {
        let mut ijk = self.ijk(c);
        let a = dir.axis;
        if dir.positive {
            if ijk[a] + 1 >= self.dims[a] {
                return None;
            }
            ijk[a] += 1;
        } else {
            if ijk[a] == 0 {
                return None;
            }
            ijk[a] -= 1;
        }
        Some(self.index(ijk[0], ijk[1], ijk[2]))
    }

    /// Neighbor that is an active cell.
    pub fn active_neighbor(&self, c: usize, dir: Dir) -> Option<usize> {
        self.neighbor(c, dir).filter(|&nb| self.active[nb])
    }

    /// Cell containing `p`, if inside the box.
    pub fn locate(&self, p: Point) -> Option<usize> {
        let mut ijk = [0usize; 3];
        for a in 0..3 {
            let t = (p[a] - self.origin[a]) / self.h;
            if !(t >= 0.0) || t >= self.dims[a] as f64 {
                return None;
            }
            ijk[a] = t.floor() as usize;
        }
        Some(self.index(ijk[0], ijk[1], ijk[2]))
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary
    }

    pub fn boundary_face_index(&self, face: Face) -> Option<usize> {
        self.boundary_index.get(&face).copied()
    }

    pub fn label(&self, face: Face) -> FaceLabel {
        match self.boundary_index.get(&face) {
            Some(&i) => self.boundary[i].label,
            None => FaceLabel::Interior,
        }
    }

    /// Relabel boundary faces. Interior faces cannot be labeled.
    pub fn set_labels(&mut self, faces: &[Face], label: FaceLabel) -> Result<()> {
        if label == FaceLabel::Interior {
            return Err(Error::invalid("boundary faces cannot be labeled interior"));
        }
        for f in faces {
            let i = self
                .boundary_index
                .get(f)
                .copied()
                .ok_or_else(|| Error::invalid(format!("face {f:?} is not a boundary face")))?;
            self.boundary[i].label = label;
        }
        Ok(())
    }

    /// Boundary faces with the given label, in boundary enumeration order.
    pub fn faces_with_label(&self, label: FaceLabel) -> Vec<Face> {
        self.boundary.iter().filter(|b| b.label == label).map(|b| b.face).collect()
    }

    /// Checks the labeling invariants: a measurement set, when present, is
    /// a connected subset of a single flat side.
    pub fn check_labels(&self) -> Result<()> {
        let meas = self.faces_with_label(FaceLabel::Measurement);
        if meas.is_empty() {
            return Ok(());
        }
        check_flat_connected(self, &meas)?;
        Ok(())
    }

    /// Distance from `p` to the closest boundary face (as a square patch).
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        let hh = 0.5 * self.h;
        self.boundary
            .iter()
            .map(|b| {
                let c = self.face_center(b.face);
                let mut d2 = 0.0;
                for a in 0..3 {
                    let off = (p[a] - c[a]).abs();
                    let e = if a == b.face.dir.axis { off } else { (off - hh).max(0.0) };
                    d2 += e * e;
                }
                d2.sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn check_flat_connected(grid: &Grid, faces: &[Face]) -> Result<()> {
    let dir = faces[0].dir;
    let plane = grid.face_center(faces[0])[dir.axis];
    for f in faces {
        if f.dir != dir || (grid.face_center(*f)[dir.axis] - plane).abs() > 1e-9 * grid.h.max(1.0) {
            return Err(Error::invalid("measurement faces do not lie on one flat side"));
        }
    }
    // connectivity in the plane via shared edges
    let set: HashMap<usize, usize> = faces.iter().enumerate().map(|(i, f)| (f.cell, i)).collect();
    let mut seen = vec![false; faces.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = queue.pop_front() {
        for d in Dir::ALL.iter().filter(|d| d.axis != dir.axis) {
            if let Some(nb) = grid.neighbor(faces[i].cell, *d) {
                if let Some(&j) = set.get(&nb) {
                    if !seen[j] {
                        seen[j] = true;
                        count += 1;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    if count != faces.len() {
        return Err(Error::invalid("measurement faces are not connected"));
    }
    Ok(())
}

/// Closed-form inclusion geometry. Levels are negative inside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeKind {
    Empty,
    Ball { center: Point, radius: f64 },
    Ellipsoid { center: Point, semi_axes: Point },
    /// Per-cell level-set values on the grid the shape is rasterized on.
    LevelSet { values: Vec<f64> },
}

impl ShapeKind {
    /// Level-set table sampled from a function at the centers of `grid`.
    pub fn level_set_from_fn(grid: &Grid, f: impl Fn(Point) -> f64) -> ShapeKind {
        ShapeKind::LevelSet { values: (0..grid.n_cells()).map(|c| f(grid.center(c))).collect() }
    }

    /// Level value at a cell; closed-form shapes ignore the cell index.
    pub fn level(&self, p: Point, cell: usize) -> f64 {
        match self {
            ShapeKind::Empty => 1.0,
            ShapeKind::Ball { center, radius } => dist(p, *center) - radius,
            ShapeKind::Ellipsoid { center, semi_axes } => {
                let s: f64 = (0..3).map(|a| ((p[a] - center[a]) / semi_axes[a]).powi(2)).sum();
                let rmin = semi_axes.iter().cloned().fold(f64::INFINITY, f64::min);
                (s.sqrt() - 1.0) * rmin
            }
            ShapeKind::LevelSet { values } => values[cell],
        }
    }

    /// Outward unit normal at (or near) a boundary point, when closed-form.
    pub fn normal(&self, p: Point) -> Option<Point> {
        let g = match self {
            ShapeKind::Ball { center, .. } => [p[0] - center[0], p[1] - center[1], p[2] - center[2]],
            ShapeKind::Ellipsoid { center, semi_axes } => {
                let mut g = [0.0; 3];
                for a in 0..3 {
                    g[a] = (p[a] - center[a]) / (semi_axes[a] * semi_axes[a]);
                }
                g
            }
            _ => return None,
        };
        let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        (n > 0.0).then(|| [g[0] / n, g[1] / n, g[2] / n])
    }

    /// Point on the boundary along the ray from the center in direction `dir`.
    pub fn boundary_point(&self, dir: Point) -> Option<Point> {
        let n = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
        let u = [dir[0] / n, dir[1] / n, dir[2] / n];
        match self {
            ShapeKind::Ball { center, radius } => {
                Some([center[0] + radius * u[0], center[1] + radius * u[1], center[2] + radius * u[2]])
            }
            ShapeKind::Ellipsoid { center, semi_axes } => {
                let s: f64 = (0..3).map(|a| (u[a] / semi_axes[a]).powi(2)).sum();
                let t = 1.0 / s.sqrt();
                Some([center[0] + t * u[0], center[1] + t * u[1], center[2] + t * u[2]])
            }
            _ => None,
        }
    }

    /// Dilation about the shape center by `factor`.
    pub fn dilated(&self, factor: f64) -> Result<ShapeKind> {
        match self {
            ShapeKind::Ball { center, radius } => Ok(ShapeKind::Ball { center: *center, radius: radius * factor }),
            ShapeKind::Ellipsoid { center, semi_axes } => Ok(ShapeKind::Ellipsoid {
                center: *center,
                semi_axes: [semi_axes[0] * factor, semi_axes[1] * factor, semi_axes[2] * factor],
            }),
            _ => Err(Error::invalid("only balls and ellipsoids can be dilated")),
        }
    }
}

/// An inclusion: its closed-form description and the rasterized mask χ_D.
#[derive(Debug, Clone)]
pub struct InclusionShape {
    pub kind: ShapeKind,
    pub mask: Vec<bool>,
}

impl InclusionShape {
    pub fn rasterize(kind: ShapeKind, grid: &Grid) -> Result<Self> {
        if let ShapeKind::LevelSet { values } = &kind {
            if values.len() != grid.n_cells() {
                return Err(Error::invalid("level-set table size does not match grid"));
            }
        }
        let mask = (0..grid.n_cells()).map(|c| kind.level(grid.center(c), c) < 0.0).collect();
        Ok(InclusionShape { kind, mask })
    }

    pub fn empty(grid: &Grid) -> Self {
        InclusionShape { kind: ShapeKind::Empty, mask: vec![false; grid.n_cells()] }
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&m| m)
    }

    /// Checks D ⊂ Ω at distance ≥ `delta0` from ∂Ω and that Ω \ D is
    /// connected. An empty inclusion is always admissible.
    pub fn validate(&self, grid: &Grid, omega: &[bool], delta0: f64) -> Result<()> {
        if self.is_empty() {
            return Ok(());
        }
        let omega_grid = grid.restricted(omega)?;
        for c in boundary_cells(grid, &self.mask) {
            if !omega[c] {
                return Err(Error::invalid(format!("inclusion cell {c} lies outside the body")));
            }
            // distance of the cell's extent to ∂Ω
            let d = omega_grid.distance_to_boundary(grid.center(c)) - 0.5 * grid.spacing();
            if d < delta0 - 1e-12 {
                return Err(Error::invalid(format!(
                    "inclusion cell {c} at distance {d:.4} from the outer boundary (< δ₀ = {delta0})"
                )));
            }
        }
        let rest: Vec<bool> = omega.iter().zip(&self.mask).map(|(&o, &d)| o && !d).collect();
        let seed = rest.iter().position(|&r| r).ok_or_else(|| Error::invalid("inclusion fills the body"))?;
        let comp = connected_component(grid, &rest, seed)?;
        if comp.iter().filter(|&&c| c).count() != rest.iter().filter(|&&c| c).count() {
            return Err(Error::invalid("complement of the inclusion is not connected"));
        }
        Ok(())
    }
}

/// Mask cells with at least one 6-neighbor outside the mask (or the box).
pub fn boundary_cells(grid: &Grid, mask: &[bool]) -> Vec<usize> {
    (0..grid.n_cells())
        .filter(|&c| mask[c])
        .filter(|&c| {
            Dir::ALL.iter().any(|&d| match grid.neighbor(c, d) {
                Some(nb) => !mask[nb],
                None => true,
            })
        })
        .collect()
}

/// Cells reachable from `seed` through 6-neighbors inside `mask`.
pub fn connected_component(grid: &Grid, mask: &[bool], seed: usize) -> Result<Vec<bool>> {
    if seed >= mask.len() || !mask[seed] {
        return Err(Error::invalid("seed cell is outside the mask"));
    }
    let mut out = vec![false; mask.len()];
    out[seed] = true;
    let mut queue = VecDeque::from([seed]);
    while let Some(c) = queue.pop_front() {
        for d in Dir::ALL {
            if let Some(nb) = grid.neighbor(c, d) {
                if mask[nb] && !out[nb] {
                    out[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
    }
    Ok(out)
}

fn directed_sup_inf(grid: &Grid, from: &[usize], to: &[Point], exec: Execution) -> f64 {
    exec.max_range(from.len(), |i| {
        let p = grid.center(from[i]);
        to.iter().map(|&q| dist(p, q)).fold(f64::INFINITY, f64::min)
    })
    .max(0.0)
}

/// Hausdorff distance between the boundaries of two masks, over
/// boundary-cell centers.
pub fn hausdorff_distance(grid: &Grid, a: &[bool], b: &[bool], exec: Execution) -> Result<f64> {
    let ba = boundary_cells(grid, a);
    let bb = boundary_cells(grid, b);
    if ba.is_empty() || bb.is_empty() {
        return Err(Error::invalid("Hausdorff distance of an empty mask"));
    }
    let pa: Vec<Point> = ba.iter().map(|&c| grid.center(c)).collect();
    let pb: Vec<Point> = bb.iter().map(|&c| grid.center(c)).collect();
    Ok(directed_sup_inf(grid, &ba, &pb, exec).max(directed_sup_inf(grid, &bb, &pa, exec)))
}

/// Modified distance d_μ: one-sided sups restricted to inclusion boundary
/// points that touch Ω_D, the component of Ω \ (D₁ ∪ D₂) reached from ∂Ω.
pub fn modified_distance(grid: &Grid, omega: &[bool], d1: &[bool], d2: &[bool], exec: Execution) -> Result<f64> {
    let free: Vec<bool> = (0..grid.n_cells()).map(|c| omega[c] && !d1[c] && !d2[c]).collect();
    let omega_grid = grid.restricted(omega)?;
    // seed the flood fill at every free cell on ∂Ω
    let mut reach = vec![false; grid.n_cells()];
    let mut any = false;
    for b in omega_grid.boundary_faces() {
        let c = b.face.cell;
        if free[c] && !reach[c] {
            any = true;
            let comp = connected_component(grid, &free, c)?;
            for (r, x) in reach.iter_mut().zip(comp) {
                *r |= x;
            }
        }
    }
    if !any {
        return Err(Error::invalid("Ω_D is empty: inclusions swallow the domain"));
    }
    let touching = |mask: &[bool]| -> Vec<usize> {
        boundary_cells(grid, mask)
            .into_iter()
            .filter(|&c| Dir::ALL.iter().any(|&d| grid.neighbor(c, d).is_some_and(|nb| reach[nb])))
            .collect()
    };
    let one_sided = |from: &[usize], other: &[bool]| -> f64 {
        let targets: Vec<Point> = boundary_cells(grid, other).iter().map(|&c| grid.center(c)).collect();
        if targets.is_empty() {
            return 0.0;
        }
        exec.max_range(from.len(), |i| {
            let c = from[i];
            if other[c] {
                return 0.0;
            }
            let p = grid.center(c);
            targets.iter().map(|&q| dist(p, q)).fold(f64::INFINITY, f64::min)
        })
        .max(0.0)
    };
    let t1 = touching(d1);
    let t2 = touching(d2);
    Ok(one_sided(&t1, d2).max(one_sided(&t2, d1)))
}

/// Ω together with the box D₀ glued across the flat measurement patch Σ.
#[derive(Debug, Clone)]
pub struct AugmentedDomain {
    grid: Arc<Grid>,
    omega_grid: Arc<Grid>,
    pub omega: Vec<bool>,
    pub d0: Vec<bool>,
    pub omega0: Vec<bool>,
    /// Σ, as faces of Ω cells pointing into D₀.
    pub sigma: Vec<Face>,
    /// Σ₀, the far side of D₀, as faces of D₀ cells.
    pub sigma0: Vec<Face>,
    depth_cells: usize,
}

impl AugmentedDomain {
    /// Standard layout: Ω = `[lo, hi]`, Σ the rectangle `[sigma_lo, sigma_hi]`
    /// (in x, y) on the bottom side z = lo.z, and D₀ of depth `r0` below it.
    /// `resolution` counts cells across the shortest side of Ω.
    pub fn from_box(lo: Point, hi: Point, sigma_lo: [f64; 2], sigma_hi: [f64; 2], r0: f64, resolution: usize) -> Result<Self> {
        if resolution < MIN_RESOLUTION {
            return Err(Error::invalid(format!("resolution {resolution} below minimum {MIN_RESOLUTION}")));
        }
        if !(r0 > 0.0) {
            return Err(Error::invalid("D₀ depth r0 must be positive"));
        }
        let ext = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
        if ext.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::invalid("degenerate body box"));
        }
        let h = ext.iter().cloned().fold(f64::INFINITY, f64::min) / resolution as f64;
        let cells = |len: f64| -> Result<usize> {
            let n = (len / h).round();
            if (n * h - len).abs() > 1e-9 * len.max(1.0) || n < 1.0 {
                return Err(Error::invalid(format!("length {len} is not a positive multiple of spacing {h}")));
            }
            Ok(n as usize)
        };
        let (nx, ny, nz) = (cells(ext[0])?, cells(ext[1])?, cells(ext[2])?);
        let depth = cells(r0)?;
        let grid = Grid::from_spacing([lo[0], lo[1], lo[2] - depth as f64 * h], h, [nx, ny, nz + depth]);
        let omega: Vec<bool> = (0..grid.n_cells()).map(|c| grid.ijk(c)[2] >= depth).collect();
        let sigma: Vec<Face> = (0..grid.n_cells())
            .filter(|&c| grid.ijk(c)[2] == depth)
            .filter(|&c| {
                let p = grid.center(c);
                (0..2).all(|a| p[a] > sigma_lo[a] && p[a] < sigma_hi[a])
            })
            .map(|c| Face { cell: c, dir: Dir::new(2, false) })
            .collect();
        augment_domain(&grid, &omega, &sigma, r0)
    }

    /// Grid of Ω₀: Dirichlet on ∂Ω₀ \ Σ₀, impedance on Σ₀.
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Grid of Ω alone: measurement faces on Σ, Dirichlet elsewhere.
    pub fn omega_grid(&self) -> &Arc<Grid> {
        &self.omega_grid
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing()
    }

    pub fn depth_cells(&self) -> usize {
        self.depth_cells
    }

    /// Outward normal of Ω on Σ.
    pub fn sigma_dir(&self) -> Dir {
        self.sigma[0].dir
    }

    pub fn in_omega(&self, p: Point) -> bool {
        self.grid.locate(p).is_some_and(|c| self.omega[c])
    }

    pub fn in_d0(&self, p: Point) -> bool {
        self.grid.locate(p).is_some_and(|c| self.d0[c])
    }
}

/// Attaches the box D₀ of depth `r0` across the flat patch Σ of Ω.
///
/// Σ must sit on one side of Ω with at least one cell of margin to the
/// side's edges, and D₀ must fit inside the grid outside Ω.
pub fn augment_domain(grid: &Grid, omega: &[bool], sigma: &[Face], r0: f64) -> Result<AugmentedDomain> {
    if !(r0 > 0.0) {
        return Err(Error::invalid("D₀ depth r0 must be positive"));
    }
    if sigma.is_empty() {
        return Err(Error::invalid("empty measurement patch Σ"));
    }
    let h = grid.spacing();
    let depth = (r0 / h).round() as usize;
    if depth == 0 {
        return Err(Error::invalid("D₀ depth is below one cell"));
    }
    let dir = sigma[0].dir;
    let omega_grid_plain = grid.restricted(omega)?;
    for f in sigma {
        if !omega[f.cell] || omega_grid_plain.label(*f) == FaceLabel::Interior {
            return Err(Error::invalid("Σ contains a face that is not on ∂Ω"));
        }
    }
    check_flat_connected(grid, sigma)?;
    // flatness margin: every tangential neighbor of a Σ face carries the same
    // boundary side
    for f in sigma {
        for d in Dir::ALL.iter().filter(|d| d.axis != dir.axis) {
            let ok = grid
                .neighbor(f.cell, *d)
                .is_some_and(|nb| omega[nb] && omega_grid_plain.label(Face { cell: nb, dir }) != FaceLabel::Interior);
            if !ok {
                return Err(Error::invalid("Σ touches an edge of its side (flatness margin violated)"));
            }
        }
    }
    let mut d0 = vec![false; grid.n_cells()];
    let mut sigma0 = Vec::with_capacity(sigma.len());
    for f in sigma {
        let mut c = f.cell;
        for _ in 0..depth {
            c = grid
                .neighbor(c, dir)
                .ok_or_else(|| Error::invalid("D₀ would exit the grid bounds"))?;
            if omega[c] {
                return Err(Error::invalid("D₀ would overlap Ω"));
            }
            d0[c] = true;
        }
        sigma0.push(Face { cell: c, dir });
    }
    let omega0: Vec<bool> = omega.iter().zip(&d0).map(|(&a, &b)| a || b).collect();
    let mut g0 = grid.restricted(&omega0)?;
    g0.set_labels(&sigma0, FaceLabel::Impedance)?;
    let mut gw = grid.restricted(omega)?;
    gw.set_labels(sigma, FaceLabel::Measurement)?;
    gw.check_labels()?;

    let aug = AugmentedDomain {
        grid: Arc::new(g0),
        omega_grid: Arc::new(gw),
        omega: omega.to_vec(),
        d0,
        omega0,
        sigma: sigma.to_vec(),
        sigma0,
        depth_cells: depth,
    };
    aug.assert_invariants()?;
    Ok(aug)
}

impl AugmentedDomain {
    fn assert_invariants(&self) -> Result<()> {
        if self.d0.iter().zip(&self.omega).any(|(&a, &b)| a && b) {
            return Err(Error::invalid("D₀ ∩ Ω ≠ ∅"));
        }
        // ∂D₀ ∩ ∂Ω ⊂ Σ: every D₀ cell adjacent to Ω touches it through a Σ face
        let sig: std::collections::HashSet<Face> = self.sigma.iter().copied().collect();
        for c in (0..self.grid.n_cells()).filter(|&c| self.d0[c]) {
            for d in Dir::ALL {
                if let Some(nb) = self.grid.neighbor(c, d) {
                    if self.omega[nb] && !sig.contains(&Face { cell: nb, dir: d.opposite() }) {
                        return Err(Error::invalid("∂D₀ ∩ ∂Ω is not contained in Σ"));
                    }
                }
            }
        }
        // Σ₀ ∩ ∂Ω = ∅
        for f in &self.sigma0 {
            if self.omega[f.cell] || self.grid.neighbor(f.cell, f.dir).is_some_and(|nb| self.omega[nb]) {
                return Err(Error::invalid("Σ₀ meets ∂Ω"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(res: usize) -> Grid {
        Grid::build([0.0; 3], [1.0; 3], res).unwrap()
    }

    #[test]
    fn build_grid_examples() {
        let g = unit(16);
        assert_eq!(g.n_cells(), 16 * 16 * 16);
        assert_eq!(g.spacing(), 1.0 / 16.0);
        assert!(Grid::build([0.0; 3], [1.0; 3], 7).is_err());
        let g = Grid::build([0.0; 3], [2.0; 3], 32).unwrap();
        assert_eq!(g.spacing(), 0.0625);
        assert!(Grid::build([0.0; 3], [1.0, 0.0, 1.0], 16).is_err());
        // every face of the outer box is a Dirichlet boundary face
        let g = unit(8);
        assert_eq!(g.boundary_faces().len(), 6 * 64);
        assert!(g.boundary_faces().iter().all(|b| b.label == FaceLabel::Dirichlet));
    }

    #[test]
    fn augment_unit_cube() {
        let aug = AugmentedDomain::from_box([0.0; 3], [1.0; 3], [0.25, 0.25], [0.75, 0.75], 0.25, 16).unwrap();
        let g = aug.grid();
        assert_eq!(aug.depth_cells(), 4);
        assert_eq!(aug.sigma.len(), 64);
        assert_eq!(aug.sigma0.len(), 64);
        for f in &aug.sigma0 {
            let z = g.face_center(*f)[2];
            assert!((z + 0.25).abs() < 1e-12);
            assert_eq!(g.label(*f), FaceLabel::Impedance);
        }
        let d0: Vec<Point> = (0..g.n_cells()).filter(|&c| aug.d0[c]).map(|c| g.center(c)).collect();
        assert_eq!(d0.len(), 64 * 4);
        assert!(d0.iter().all(|p| p[2] < 0.0 && p[2] > -0.25 && p[0] > 0.25 && p[0] < 0.75));
        assert_eq!(aug.omega_grid().faces_with_label(FaceLabel::Measurement).len(), 64);
    }

    #[test]
    fn augment_errors() {
        // Σ reaching the edge of the bottom side
        assert!(AugmentedDomain::from_box([0.0; 3], [1.0; 3], [0.0, 0.25], [0.75, 0.75], 0.25, 16).is_err());
        assert!(AugmentedDomain::from_box([0.0; 3], [1.0; 3], [0.25, 0.25], [0.75, 0.75], 0.0, 16).is_err());
        // D₀ leaving the grid
        let g = Grid::build([0.0; 3], [1.0; 3], 16).unwrap();
        let omega = vec![true; g.n_cells()];
        let sigma: Vec<Face> = (0..g.n_cells())
            .filter(|&c| {
                let [i, j, k] = g.ijk(c);
                k == 0 && (4..12).contains(&i) && (4..12).contains(&j)
            })
            .map(|c| Face { cell: c, dir: Dir::new(2, false) })
            .collect();
        assert!(augment_domain(&g, &omega, &sigma, 0.25).is_err());
    }

    fn ball(g: &Grid, c: Point, r: f64) -> Vec<bool> {
        InclusionShape::rasterize(ShapeKind::Ball { center: c, radius: r }, g).unwrap().mask
    }

    /// Brute force over every pair of boundary-cell centers, without the
    /// parallel helper.
    fn hausdorff_oracle(g: &Grid, a: &[bool], b: &[bool]) -> f64 {
        let pa: Vec<Point> = boundary_cells(g, a).iter().map(|&c| g.center(c)).collect();
        let pb: Vec<Point> = boundary_cells(g, b).iter().map(|&c| g.center(c)).collect();
        let dir = |x: &[Point], y: &[Point]| {
            let mut m: f64 = 0.0;
            for p in x {
                let mut best = f64::INFINITY;
                for q in y {
                    best = best.min(dist(*p, *q));
                }
                m = m.max(best);
            }
            m
        };
        dir(&pa, &pb).max(dir(&pb, &pa))
    }

    #[test]
    fn hausdorff_examples() {
        let g = unit(32);
        let h = g.spacing();
        let c = [0.5; 3];
        let a = ball(&g, c, 0.2);
        assert_eq!(hausdorff_distance(&g, &a, &a, Execution::default()).unwrap(), 0.0);
        let b = ball(&g, c, 0.3);
        let d = hausdorff_distance(&g, &a, &b, Execution::Sequential).unwrap();
        assert!((d - hausdorff_oracle(&g, &a, &b)).abs() < 1e-14);
        assert!((d - 0.1).abs() <= h, "{d}");
        let b = ball(&g, [0.6, 0.5, 0.5], 0.2);
        let d = hausdorff_distance(&g, &a, &b, Execution::Parallel).unwrap();
        assert!((d - hausdorff_oracle(&g, &a, &b)).abs() < 1e-14);
        assert!((d - 0.1).abs() <= h, "{d}");
        assert!(hausdorff_distance(&g, &a, &vec![false; g.n_cells()], Execution::default()).is_err());
    }

    #[test]
    fn modified_distance_examples() {
        let g = unit(32);
        let h = g.spacing();
        let omega = vec![true; g.n_cells()];
        let a = ball(&g, [0.5; 3], 0.2);
        assert_eq!(modified_distance(&g, &omega, &a, &a, Execution::default()).unwrap(), 0.0);
        // disjoint balls far apart
        let d1 = ball(&g, [0.3, 0.5, 0.5], 0.12);
        let d2 = ball(&g, [0.72, 0.5, 0.5], 0.1);
        let dm = modified_distance(&g, &omega, &d1, &d2, Execution::default()).unwrap();
        let dh = hausdorff_oracle(&g, &d1, &d2);
        assert!((dm - dh).abs() <= h, "{dm} vs {dh}");
        // nested: ∂D1 hidden inside D2
        let inner = ball(&g, [0.5; 3], 0.15);
        let outer = ball(&g, [0.5; 3], 0.3);
        let dm = modified_distance(&g, &omega, &inner, &outer, Execution::default()).unwrap();
        let expect = boundary_cells(&g, &outer)
            .iter()
            .map(|&c| {
                let p = g.center(c);
                (0..g.n_cells()).filter(|&k| inner[k]).map(|k| dist(p, g.center(k))).fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        assert!((dm - expect).abs() < 1e-12, "{dm} vs {expect}");
        // swallowed domain
        assert!(modified_distance(&g, &omega, &omega, &a, Execution::default()).is_err());
    }

    #[test]
    fn connected_component_examples() {
        let g = unit(8);
        let full = vec![true; g.n_cells()];
        assert_eq!(connected_component(&g, &full, 17).unwrap(), full);
        let slabs: Vec<bool> = (0..g.n_cells()).map(|c| g.ijk(c)[2] != 4).collect();
        let comp = connected_component(&g, &slabs, 0).unwrap();
        assert!((0..g.n_cells()).all(|c| comp[c] == (g.ijk(c)[2] < 4)));
        assert!(connected_component(&g, &slabs, g.index(0, 0, 4)).is_err());
    }

    #[test]
    fn annulus_component_matches_exhaustive_bfs() {
        let g = unit(16);
        let d = ball(&g, [0.5; 3], 0.25);
        let outside: Vec<bool> = d.iter().map(|&x| !x).collect();
        let comp = connected_component(&g, &outside, 0).unwrap();
        assert_eq!(comp, outside);
    }

    #[test]
    fn inclusion_validation() {
        let g = unit(16);
        let omega = vec![true; g.n_cells()];
        let ok = InclusionShape::rasterize(ShapeKind::Ball { center: [0.5; 3], radius: 0.2 }, &g).unwrap();
        ok.validate(&g, &omega, 0.1).unwrap();
        let near = InclusionShape::rasterize(ShapeKind::Ball { center: [0.2, 0.5, 0.5], radius: 0.15 }, &g).unwrap();
        assert!(near.validate(&g, &omega, 0.1).is_err());
        // spherical shell: the cavity is cut off from ∂Ω
        let shell = InclusionShape::rasterize(
            ShapeKind::level_set_from_fn(&g, |p| (dist(p, [0.5; 3]) - 0.25).abs() - 0.07),
            &g,
        )
        .unwrap();
        assert!(shell.validate(&g, &omega, 0.05).is_err());
    }
}
