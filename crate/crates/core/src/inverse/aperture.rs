use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C;

use crate::exec::Execution;
use crate::geometry::{AugmentedDomain, Dir, Face, Grid};
use crate::media::MediumField;
use crate::solver::{cauchy_pair, CauchyPair, DirichletProblem, SolverOptions};
use crate::{Error, Result};

/// Relative singular-value floor below which a basis counts as rank deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Smallest number of inputs accepted for a Cauchy data set.
pub const MIN_BASIS: usize = 8;

/// Discrete `H^{1/2} × H^{−1/2}` norm on Σ: traces weighted by `(1+μ)^{1/2}`
/// and fluxes by `(1+μ)^{−1/2}` in the eigenbasis of the face-graph
/// Laplacian (scaled by `1/h²`).
#[derive(Debug, Clone)]
pub struct TraceNorm {
    faces: Vec<Face>,
    basis: DMatrix<f64>,
    mu: DVector<f64>,
    area: f64,
}

impl TraceNorm {
    pub fn new(grid: &Grid, faces: &[Face]) -> Result<Self> {
        let m = faces.len();
        if m == 0 {
            return Err(Error::invalid("empty face set"));
        }
        let index: HashMap<usize, usize> = faces.iter().enumerate().map(|(k, f)| (f.cell, k)).collect();
        let h = grid.spacing();
        let mut lap = DMatrix::<f64>::zeros(m, m);
        for (k, f) in faces.iter().enumerate() {
            for d in Dir::ALL.iter().filter(|d| d.axis != f.dir.axis) {
                if let Some(&l) = grid.neighbor(f.cell, *d).and_then(|nb| index.get(&nb)) {
                    lap[(k, k)] += 1.0 / (h * h);
                    lap[(k, l)] -= 1.0 / (h * h);
                }
            }
        }
        let eig = SymmetricEigen::new(lap);
        Ok(TraceNorm { faces: faces.to_vec(), basis: eig.eigenvectors, mu: eig.eigenvalues.map(|v| v.max(0.0)), area: h * h })
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.mu
    }

    /// Coordinates of `(f, g)` in which the weighted norm is Euclidean.
    pub fn embed(&self, trace: &[C], flux: &[C]) -> Result<DVector<C>> {
        let m = self.faces.len();
        if trace.len() != m || flux.len() != m {
            return Err(Error::invalid("pair does not match the Σ face enumeration"));
        }
        let s = self.area.sqrt();
        let mut out = DVector::<C>::zeros(2 * m);
        for k in 0..m {
            let col = self.basis.column(k);
            let (mut ft, mut gt) = (C::new(0.0, 0.0), C::new(0.0, 0.0));
            for i in 0..m {
                ft += trace[i] * col[i];
                gt += flux[i] * col[i];
            }
            let w = (1.0 + self.mu[k]).sqrt();
            out[k] = ft * w * s;
            out[m + k] = gt / w * s;
        }
        Ok(out)
    }

    pub fn norm(&self, trace: &[C], flux: &[C]) -> Result<f64> {
        Ok(self.embed(trace, flux)?.norm())
    }
}

/// Tensor products of a two-scale family of `cos²` bumps on the Σ
/// rectangle: coarse bumps centered at 1/4 and 3/4 of each side (half-width
/// 1/4) and fine bumps at 3/8 and 5/8 (half-width 1/8). Sixteen inputs.
pub fn bump_basis(grid: &Grid, faces: &[Face]) -> Vec<Vec<C>> {
    let axes: Vec<usize> = (0..3).filter(|&a| a != faces[0].dir.axis).collect();
    let centers: Vec<[f64; 3]> = faces.iter().map(|f| grid.face_center(*f)).collect();
    let h = grid.spacing();
    let (lo, hi): (Vec<f64>, Vec<f64>) = axes
        .iter()
        .map(|&a| {
            let lo = centers.iter().map(|p| p[a]).fold(f64::INFINITY, f64::min) - 0.5 * h;
            let hi = centers.iter().map(|p| p[a]).fold(f64::NEG_INFINITY, f64::max) + 0.5 * h;
            (lo, hi)
        })
        .unzip();
    let family = [(0.25, 0.25), (0.75, 0.25), (0.375, 0.125), (0.625, 0.125)];
    let bump = |t: f64, (c, w): (f64, f64)| -> f64 {
        let d = (t - c).abs();
        if d < w {
            (std::f64::consts::FRAC_PI_2 * d / w).cos().powi(2)
        } else {
            0.0
        }
    };
    let mut out = Vec::with_capacity(16);
    for bj in family {
        for bi in family {
            out.push(
                centers
                    .iter()
                    .map(|p| {
                        let t0 = (p[axes[0]] - lo[0]) / (hi[0] - lo[0]);
                        let t1 = (p[axes[1]] - lo[1]) / (hi[1] - lo[1]);
                        C::new(bump(t0, bi) * bump(t1, bj), 0.0)
                    })
                    .collect(),
            );
        }
    }
    out
}

/// Span of the Cauchy pairs generated by a fixed list of Σ traces.
#[derive(Debug, Clone)]
pub struct CauchyDataSet {
    pub inputs: Vec<Vec<C>>,
    pub pairs: Vec<CauchyPair>,
    pub norm: TraceNorm,
}

impl CauchyDataSet {
    /// Solves the Dirichlet problem on Ω once per input.
    pub fn build(aug: &AugmentedDomain, medium: &MediumField, inputs: Vec<Vec<C>>, norm: TraceNorm, options: SolverOptions, exec: Execution) -> Result<Self> {
        if inputs.len() < MIN_BASIS {
            return Err(Error::invalid(format!("Cauchy basis has {} inputs, need at least {MIN_BASIS}", inputs.len())));
        }
        if norm.faces() != aug.sigma.as_slice() {
            return Err(Error::invalid("norm faces differ from Σ"));
        }
        let problem = DirichletProblem::new(aug, medium, options, exec)?;
        let pairs = exec
            .map(&inputs, |f| -> Result<CauchyPair> {
                let (u, _) = problem.solve(f)?;
                cauchy_pair(&u, medium, &aug.sigma, Some(f))
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(CauchyDataSet { inputs, pairs, norm })
    }

    /// Weighted pair coordinates as matrix columns.
    pub fn columns(&self) -> Result<DMatrix<C>> {
        let cols = self.pairs.iter().map(|p| self.norm.embed(&p.trace, &p.flux)).collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_columns(&cols))
    }
}

/// Both directed distances and their maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aperture {
    pub value: f64,
    /// `‖(I − P₂)P₁‖`.
    pub forward: f64,
    /// `‖(I − P₁)P₂‖`.
    pub backward: f64,
}

fn orthonormal(a: &DMatrix<C>) -> Result<DMatrix<C>> {
    if a.ncols() == 0 || a.ncols() > a.nrows() {
        return Err(Error::invalid("basis must have between 1 and nrows columns"));
    }
    let svd = a.clone().svd(true, false);
    let s = &svd.singular_values;
    let smax = s.max();
    if !(smax > 0.0) || s.min() < RANK_TOL * smax {
        return Err(Error::invalid("rank-deficient basis"));
    }
    Ok(svd.u.expect("left singular vectors"))
}

fn directed(q1: &DMatrix<C>, q2: &DMatrix<C>) -> f64 {
    let r = q1 - q2 * (q2.adjoint() * q1);
    r.singular_values().max().min(1.0)
}

/// Aperture between the column spans of `a` and `b`.
pub fn subspace_aperture(a: &DMatrix<C>, b: &DMatrix<C>) -> Result<Aperture> {
    if a.nrows() != b.nrows() {
        return Err(Error::invalid("subspaces live in different spaces"));
    }
    let (q1, q2) = (orthonormal(a)?, orthonormal(b)?);
    let forward = directed(&q1, &q2);
    let backward = directed(&q2, &q1);
    Ok(Aperture { value: forward.max(backward), forward, backward })
}

pub fn cauchy_aperture(c1: &CauchyDataSet, c2: &CauchyDataSet) -> Result<Aperture> {
    if c1.inputs != c2.inputs || c1.norm.faces() != c2.norm.faces() {
        return Err(Error::invalid("Cauchy data sets use different inputs or Σ enumerations"));
    }
    subspace_aperture(&c1.columns()?, &c2.columns()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> DMatrix<C> {
        DMatrix::from_iterator(v.len(), 1, v.iter().map(|&x| C::new(x, 0.0)))
    }

    #[test]
    fn plane_angles() {
        let e1 = col(&[1.0, 0.0]);
        let t = 30f64.to_radians();
        let a = subspace_aperture(&e1, &col(&[t.cos(), t.sin()])).unwrap();
        assert!((a.value - 0.5).abs() < 1e-12);
        assert!((a.forward - a.backward).abs() < 1e-12);
        assert!(subspace_aperture(&e1, &col(&[3.0, 0.0])).unwrap().value < 1e-15);
        assert!((subspace_aperture(&e1, &col(&[0.0, 2.0])).unwrap().value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rank_deficiency_is_rejected() {
        let a = DMatrix::from_columns(&[col(&[1.0, 0.0, 0.0]).column(0).into_owned(), col(&[2.0, 0.0, 0.0]).column(0).into_owned()]);
        assert!(subspace_aperture(&a, &a).is_err());
    }

    #[test]
    fn unequal_dimensions_give_one() {
        let a = DMatrix::<C>::identity(3, 2);
        let b = DMatrix::<C>::identity(3, 1);
        let ap = subspace_aperture(&a, &b).unwrap();
        assert!(ap.backward < 1e-15);
        assert!((ap.forward - 1.0).abs() < 1e-15);
    }
}
