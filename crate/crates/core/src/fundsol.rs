//! Fundamental solution of a flat two-phase anisotropic medium.
//!
//! For `σ₀ = (a⁻ + (a⁺ − a⁻)χ_{x_n > 0})·A₀` the kernel is built from the
//! Laplace kernel composed with `J = A₀^{−1/2}` and an image pole
//! `y* = (y′, −y_n)` reflected across the interface. Coordinates here are
//! relative to an interface plane `x_n = z₀`.

use std::sync::Arc;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64 as C;

use crate::exec::Execution;
use crate::geometry::{dist, Grid, Point};
use crate::green::{decay_fit, gradient, gradient_norm, GreenField};
use crate::fit::LinearFit;
use crate::media::{Bounds, CellCoefficients, MediumField, Tensor};
use crate::solver::{assemble, Impedance};
use crate::{Error, Result};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct LayeredKernel {
    pub a_plus: f64,
    pub a_minus: f64,
    pub a0: Tensor,
    pub j: Tensor,
    pub det_j: f64,
    /// Height of the interface plane.
    pub interface: f64,
}

fn mat(t: &Tensor) -> Matrix3<f64> {
    Matrix3::from_fn(|i, k| t[i][k])
}

fn tensor(m: &Matrix3<f64>) -> Tensor {
    [0, 1, 2].map(|i| [0, 1, 2].map(|k| m[(i, k)]))
}

fn apply(t: &Tensor, v: Point) -> Point {
    [0, 1, 2].map(|i| t[i][0] * v[0] + t[i][1] * v[1] + t[i][2] * v[2])
}

fn norm(v: Point) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

impl LayeredKernel {
    pub fn new(a_plus: f64, a_minus: f64, a0: Tensor, interface: f64) -> Result<Self> {
        if !(a_plus > 0.0 && a_minus > 0.0) {
            return Err(Error::invalid("phase coefficients must be positive"));
        }
        for i in 0..3 {
            for k in 0..i {
                if a0[i][k] != a0[k][i] {
                    return Err(Error::invalid("A₀ is not symmetric"));
                }
            }
        }
        if a0[0][2] != 0.0 || a0[1][2] != 0.0 {
            return Err(Error::invalid("A₀ must have e_n as an eigenvector"));
        }
        let eig = SymmetricEigen::new(mat(&a0));
        if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::invalid("A₀ is not positive definite"));
        }
        let d = Matrix3::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
        let j = eig.eigenvectors * d * eig.eigenvectors.transpose();
        let det_j = eig.eigenvalues.iter().map(|l| 1.0 / l.sqrt()).product();
        Ok(LayeredKernel { a_plus, a_minus, a0, j: tensor(&j), det_j, interface })
    }

    /// Isotropic kernel with interface at x_n = 0.
    pub fn isotropic(a_plus: f64, a_minus: f64) -> Self {
        Self::new(a_plus, a_minus, crate::media::IDENTITY, 0.0).expect("valid isotropic kernel")
    }

    /// Residual ‖J·J − A₀⁻¹‖ (max entry).
    pub fn square_root_defect(&self) -> f64 {
        let j = mat(&self.j);
        let inv = mat(&self.a0).try_inverse().expect("A₀ invertible");
        (j * j - inv).abs().max()
    }

    pub fn image(&self, y: Point) -> Point {
        [y[0], y[1], 2.0 * self.interface - y[2]]
    }

    fn side(&self, p: Point) -> f64 {
        p[2] - self.interface
    }

    /// Coefficients (direct, image) of the branch for an observation side
    /// and the source side.
    fn weights(&self, x_plus: bool, y_plus: bool) -> (f64, f64) {
        let (ap, am) = (self.a_plus, self.a_minus);
        match (x_plus, y_plus) {
            (true, true) => (1.0 / ap, (ap - am) / (ap * (ap + am))),
            (false, false) => (1.0 / am, (am - ap) / (am * (ap + am))),
            _ => (2.0 / (am + ap), 0.0),
        }
    }

    /// The branch of H selected by `x_plus`, evaluated at `x` regardless of
    /// which side `x` lies on.
    pub fn branch(&self, x: Point, y: Point, x_plus: bool) -> Result<f64> {
        if self.side(y) == 0.0 {
            return Err(Error::invalid("pole lies on the interface"));
        }
        let (w, wi) = self.weights(x_plus, self.side(y) > 0.0);
        let mut v = w * gamma_aniso(x, y, &self.j)?;
        if wi != 0.0 {
            v += wi * gamma_aniso(x, self.image(y), &self.j)?;
        }
        Ok(self.det_j * v)
    }

    /// Analytic ∇ₓ of a branch.
    pub fn branch_gradient(&self, x: Point, y: Point, x_plus: bool) -> Result<Point> {
        if self.side(y) == 0.0 {
            return Err(Error::invalid("pole lies on the interface"));
        }
        let (w, wi) = self.weights(x_plus, self.side(y) > 0.0);
        let mut g = [0.0; 3];
        for (weight, pole) in [(w, y), (wi, self.image(y))] {
            if weight == 0.0 {
                continue;
            }
            let gg = gamma_aniso_gradient(x, pole, &self.j)?;
            for k in 0..3 {
                g[k] += self.det_j * weight * gg[k];
            }
        }
        Ok(g)
    }

    /// Conormal flux `a^±·(A₀∇H)·e_n` from the given branch gradient.
    pub fn conormal(&self, grad: Point, x_plus: bool) -> f64 {
        let a = if x_plus { self.a_plus } else { self.a_minus };
        a * (self.a0[2][0] * grad[0] + self.a0[2][1] * grad[1] + self.a0[2][2] * grad[2])
    }

    /// Phase coefficient σ₀ at `x`.
    pub fn sigma(&self, x: Point) -> Tensor {
        let a = if self.side(x) > 0.0 { self.a_plus } else { self.a_minus };
        crate::media::scaled(&self.a0, a)
    }
}

/// `1/(4π |J(x − y)|)`.
pub fn gamma_aniso(x: Point, y: Point, j: &Tensor) -> Result<f64> {
    let r = norm(apply(j, sub(x, y)));
    if r == 0.0 {
        return Err(Error::invalid("coincident points"));
    }
    Ok(1.0 / (FOUR_PI * r))
}

/// `∇ₓ Γ(Jx, Jy) = −JᵀJ(x − y) / (4π |J(x − y)|³)`.
pub fn gamma_aniso_gradient(x: Point, y: Point, j: &Tensor) -> Result<Point> {
    let jd = apply(j, sub(x, y));
    let r = norm(jd);
    if r == 0.0 {
        return Err(Error::invalid("coincident points"));
    }
    let jt = mat(j).transpose();
    let v = jt * Vector3::from(jd);
    let s = -1.0 / (FOUR_PI * r * r * r);
    Ok([s * v[0], s * v[1], s * v[2]])
}

/// Three-case layered kernel H(x, y).
pub fn layered_h(x: Point, y: Point, k: &LayeredKernel) -> Result<f64> {
    k.branch(x, y, k.side(x) > 0.0)
}

/// ∇ₓ H(x, y).
pub fn layered_h_gradient(x: Point, y: Point, k: &LayeredKernel) -> Result<Point> {
    k.branch_gradient(x, y, k.side(x) > 0.0)
}

/// Relative mismatches of value and conormal flux across the interface at
/// the tangential offsets `probes` (absolute x′ positions).
///
/// Values are the one-sided limits of the two branches at `x_n = z₀`.
/// Fluxes use second-order one-sided differences with step `step`.
pub fn transmission_check(k: &LayeredKernel, y: Point, probes: &[[f64; 2]], step: f64) -> Result<(f64, f64)> {
    let (mut dv, mut df): (f64, f64) = (0.0, 0.0);
    let z0 = k.interface;
    for p in probes {
        let at = |dz: f64| [p[0], p[1], z0 + dz];
        let vp = k.branch(at(0.0), y, true)?;
        let vm = k.branch(at(0.0), y, false)?;
        dv = dv.max((vp - vm).abs() / vp.abs().max(vm.abs()));
        let dp = (-3.0 * vp + 4.0 * k.branch(at(step), y, true)? - k.branch(at(2.0 * step), y, true)?) / (2.0 * step);
        let dm = (3.0 * vm - 4.0 * k.branch(at(-step), y, false)? + k.branch(at(-2.0 * step), y, false)?) / (2.0 * step);
        // tangential derivatives do not enter: A₀ e_n ∥ e_n
        let fp = k.a_plus * k.a0[2][2] * dp;
        let fm = k.a_minus * k.a0[2][2] * dm;
        df = df.max((fp - fm).abs() / fp.abs().max(fm.abs()).max(1e-300));
    }
    Ok((dv, df))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Residual {
    Value,
    Gradient,
}

/// Log-log slope of |G − H| (or |∇G − ∇H|) against |x − y| over `[r_min, r_max]`.
pub fn fit_residual_exponent(g: &GreenField, k: &LayeredKernel, what: Residual, r_min: f64, r_max: f64) -> Result<LinearFit> {
    let grid = g.grid();
    let y = g.pole_center();
    let n = grid.n_cells();
    let mag: Vec<f64> = match what {
        Residual::Value => (0..n)
            .map(|c| {
                if !grid.is_active(c) || c == g.pole_cell {
                    return 0.0;
                }
                layered_h(grid.center(c), y, k).map(|h| (g.get(c).re - h).hypot(g.get(c).im)).unwrap_or(0.0)
            })
            .collect(),
        Residual::Gradient => {
            let dg = gradient(&g.values);
            (0..n)
                .map(|c| {
                    if !grid.is_active(c) || c == g.pole_cell {
                        return 0.0;
                    }
                    match layered_h_gradient(grid.center(c), y, k) {
                        Ok(dh) => {
                            let d = [0, 1, 2].map(|a| dg[c][a] - C::new(dh[a], 0.0));
                            gradient_norm(&d)
                        }
                        Err(_) => 0.0,
                    }
                })
                .collect()
        }
    };
    decay_fit(g, &mag, r_min, r_max, 8)
}

/// Root-mean-square truncation residual `(A·H − b)/h³` of the assembled operator
/// applied to H sampled on a `[−½, ½]³` grid of the given resolution.
/// Cells within `exclude` of the pole, the interface or the outer boundary
/// are skipped.
pub fn operator_residual(k: &LayeredKernel, y: Point, resolution: usize, exclude: f64, exec: Execution) -> Result<f64> {
    let grid = Arc::new(Grid::build([-0.5; 3], [0.5; 3], resolution)?);
    let n = grid.n_cells();
    let bounds = Bounds { gamma_bar: f64::INFINITY, eta0: 0.0, lambda_bar: f64::INFINITY };
    let medium = MediumField::sampled(&grid, &vec![false; n], &vec![false; n], bounds, |p| {
        let a = if p[2] > k.interface { k.a_plus } else { k.a_minus };
        CellCoefficients { a_b: a, a_d: a, tensor: k.a0, q_b: 0.0, q_d: 0.0 }
    })?;
    let op = assemble(&grid, &medium, Impedance::Plus, exec)?;
    let h_cell: Vec<C> = (0..n).map(|c| layered_h(grid.center(c), y, k).map(|v| C::new(v, 0.0))).collect::<Result<_>>()?;
    let data: Vec<C> = grid
        .boundary_faces()
        .iter()
        .map(|bf| layered_h(grid.face_center(bf.face), y, k).map(|v| C::new(v, 0.0)))
        .collect::<Result<_>>()?;
    let x = op.gather(&h_cell);
    let ax = op.matrix().matvec(&x, exec);
    let b = op.rhs(None, Some(&data))?;
    let vol = grid.cell_volume();
    let (mut sum, mut count) = (0.0, 0usize);
    for r in 0..op.n_rows() {
        let p = grid.center(op.row_cell(r));
        let wall = 0.5 - p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if dist(p, y) >= exclude && (p[2] - k.interface).abs() >= exclude && wall >= exclude {
            sum += ((ax[r] - b[r]).norm() / vol).powi(2);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::invalid("no cells left after exclusion"));
    }
    Ok((sum / count as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::IDENTITY;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn gamma_examples() {
        let i = IDENTITY;
        assert!(close(gamma_aniso([0.1, 0.0, 0.0], [0.0; 3], &i).unwrap(), 0.795775, 1e-6));
        let two = crate::media::scaled(&IDENTITY, 2.0);
        assert!(close(gamma_aniso([0.1, 0.0, 0.0], [0.0; 3], &two).unwrap(), 0.397887, 1e-6));
        let d = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]];
        let direct = 1.0 / (4.0 * std::f64::consts::PI * 0.2);
        assert!(close(gamma_aniso([0.0, 0.0, 0.1], [0.0; 3], &d).unwrap(), direct, 1e-15));
        assert!(gamma_aniso([0.0; 3], [0.0; 3], &i).is_err());
    }

    #[test]
    fn square_root_and_determinant() {
        let a0 = [[2.0, 0.5, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, 4.0]];
        let k = LayeredKernel::new(2.0, 1.0, a0, 0.0).unwrap();
        assert!(k.square_root_defect() < 1e-12);
        let det_a: f64 = mat(&a0).determinant();
        assert!(close(k.det_j, 1.0 / det_a.sqrt(), 1e-14));
        assert!(LayeredKernel::new(2.0, 1.0, [[1.0, 0.0, 0.2], [0.0, 1.0, 0.0], [0.2, 0.0, 1.0]], 0.0).is_err());
    }

    #[test]
    fn hand_oracle_same_side() {
        let k = LayeredKernel::isotropic(2.0, 1.0);
        let h = layered_h([0.0, 0.0, 0.1], [0.0, 0.0, 0.2], &k).unwrap();
        let oracle = 0.5 * (1.0 / (4.0 * std::f64::consts::PI * 0.1)) + (1.0 / 6.0) * (1.0 / (4.0 * std::f64::consts::PI * 0.3));
        assert!(close(h, oracle, 1e-15));
        assert!(close(h, 0.442097, 1e-6));
    }

    #[test]
    fn cross_case_and_no_jump() {
        let a0 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]];
        let k = LayeredKernel::new(2.0, 1.0, a0, 0.0).unwrap();
        let (x, y) = ([0.1, 0.0, -0.1], [0.0, 0.05, 0.2]);
        let expect = (2.0 / 3.0) * k.det_j * gamma_aniso(x, y, &k.j).unwrap();
        assert!(close(layered_h(x, y, &k).unwrap(), expect, 1e-15));
        let same = LayeredKernel::isotropic(1.5, 1.5);
        for (x, y) in [([0.1, 0.0, 0.1], [0.0, 0.0, 0.3]), ([0.1, 0.0, -0.1], [0.0, 0.0, 0.3]), ([0.1, 0.0, -0.1], [0.0, 0.0, -0.3])] {
            let g = gamma_aniso(x, y, &IDENTITY).unwrap() / 1.5;
            assert!(close(layered_h(x, y, &same).unwrap(), g, 1e-15));
        }
        assert!(layered_h([0.0; 3], [0.0, 0.0, 0.0], &same).is_err());
    }

    #[test]
    fn transmission_conditions() {
        let probes = [[0.0, 0.0], [0.1, -0.05], [0.3, 0.2]];
        let a0 = [[1.5, 0.3, 0.0], [0.3, 1.0, 0.0], [0.0, 0.0, 2.0]];
        for (ap, am) in [(2.0, 1.0), (0.5, 3.0)] {
            let k = LayeredKernel::new(ap, am, a0, 0.0).unwrap();
            for y in [[0.0, 0.0, 0.2], [0.05, 0.0, -0.15]] {
                let (dv, df) = transmission_check(&k, y, &probes, 1e-3).unwrap();
                assert!(dv <= 1e-6, "{dv}");
                assert!(df <= 1e-4, "{df}");
            }
        }
        let k = LayeredKernel::isotropic(1.0, 1.0);
        let (_, df) = transmission_check(&k, [0.0, 0.0, 0.2], &probes, 1e-3).unwrap();
        assert!(df <= 1e-4);
    }

    #[test]
    fn analytic_flux_continuity_and_fd_gradient() {
        let a0 = [[1.5, 0.3, 0.0], [0.3, 1.0, 0.0], [0.0, 0.0, 2.0]];
        let k = LayeredKernel::new(2.0, 1.0, a0, 0.0).unwrap();
        let y = [0.02, -0.03, 0.2];
        let x = [0.1, 0.05, 0.0];
        let fp = k.conormal(k.branch_gradient(x, y, true).unwrap(), true);
        let fm = k.conormal(k.branch_gradient(x, y, false).unwrap(), false);
        assert!((fp - fm).abs() <= 1e-12 * fp.abs());
        let p = [0.1, 0.05, 0.07];
        let g = layered_h_gradient(p, y, &k).unwrap();
        for a in 0..3 {
            let mut e = [0.0; 3];
            e[a] = 1e-5;
            let fd = (layered_h([p[0] + e[0], p[1] + e[1], p[2] + e[2]], y, &k).unwrap()
                - layered_h([p[0] - e[0], p[1] - e[1], p[2] - e[2]], y, &k).unwrap())
                / 2e-5;
            assert!((fd - g[a]).abs() <= 1e-6 * g[a].abs().max(1.0));
        }
    }

    #[test]
    fn positivity() {
        let k = LayeredKernel::new(3.0, 0.5, [[1.0, 0.2, 0.0], [0.2, 2.0, 0.0], [0.0, 0.0, 0.7]], 0.0).unwrap();
        for i in 0..10 {
            let t = i as f64 * 0.37;
            let x = [t.sin() * 0.3, t.cos() * 0.2, (t * 1.7).sin() * 0.4];
            for y in [[0.0, 0.0, 0.15], [0.1, 0.0, -0.2]] {
                assert!(layered_h(x, y, &k).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn operator_residual_converges() {
        let a0 = [[1.5, 0.3, 0.0], [0.3, 1.0, 0.0], [0.0, 0.0, 2.0]];
        let k = LayeredKernel::new(2.0, 1.0, a0, 0.0).unwrap();
        let y = [0.03, -0.02, 0.17];
        let r: Vec<f64> = [16, 32].iter().map(|&n| operator_residual(&k, y, n, 0.2, Execution::default()).unwrap()).collect();
        assert!(r[0] / r[1] >= 3.5, "{r:?}");
    }
}
