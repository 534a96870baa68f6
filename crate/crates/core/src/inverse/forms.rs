//! The boundary form `S_{U₀}` on Σ, its volume counterpart and the split
//! `f = S₁ − S₂` over the inclusions.
//!
//! All volume sums are the discrete energy form of the assembled operator
//! with the coefficients replaced by their difference, so that the
//! boundary/volume identity holds exactly for diagonal tensors.

use num_complex::Complex64 as C;

use super::Configuration;
use crate::geometry::{AugmentedDomain, Dir, Face, FaceLabel, Grid};
use crate::green::GreenField;
use crate::media::MediumField;
use crate::solver::ComplexField;
use crate::{Error, Result};

/// Cells within this many index steps (max norm) of a pole cell are left out
/// of the inclusion quadratures.
pub const HALO_CELLS: usize = 2;

fn harmonic(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

/// Which faces between two active cells enter a region sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceRule {
    /// Both cells in the region.
    Both,
    /// At least one cell in the region.
    Either,
}

/// Centered difference of `u` at `c` along `axis`, with the assembly's
/// ghost values for homogeneous data: `−u_c` behind Dirichlet faces and
/// `u_c` behind impedance faces.
fn centered(grid: &Grid, u: &ComplexField, c: usize, axis: usize) -> C {
    let side = |positive: bool| -> C {
        let dir = Dir::new(axis, positive);
        match grid.active_neighbor(c, dir) {
            Some(nb) => u.get(nb),
            None => match grid.label(Face { cell: c, dir }) {
                FaceLabel::Impedance => u.get(c),
                _ => -u.get(c),
            },
        }
    };
    (side(true) - side(false)) / (2.0 * grid.spacing())
}

/// `a₁(u, v) − a₂(u, v)` restricted to `region`, where `a_k` is the energy
/// form of medium `k`: face terms `T Δu Δv`, boundary terms `2hσ u v`,
/// cross terms `h³ σ_ij D_i u D_j v` and the mass term `−h³ q u v`.
/// This approximates `∫(σ₁−σ₂)∇u·∇v + ∫(q₂−q₁)uv` over the region.
pub fn form_difference(m1: &MediumField, m2: &MediumField, u: &ComplexField, v: &ComplexField, region: &[bool], rule: FaceRule) -> C {
    let grid = u.grid();
    let h = grid.spacing();
    let vol = grid.cell_volume();
    let mut s = C::new(0.0, 0.0);
    for c in (0..grid.n_cells()).filter(|&c| grid.is_active(c)) {
        let (s1, s2) = (m1.effective_sigma(c), m2.effective_sigma(c));
        for dir in Dir::ALL {
            let a = dir.axis;
            match grid.active_neighbor(c, dir) {
                Some(nb) if dir.positive => {
                    let inside = match rule {
                        FaceRule::Both => region[c] && region[nb],
                        FaceRule::Either => region[c] || region[nb],
                    };
                    if !inside {
                        continue;
                    }
                    let t1 = h * harmonic(s1[a][a], m1.effective_sigma(nb)[a][a]);
                    let t2 = h * harmonic(s2[a][a], m2.effective_sigma(nb)[a][a]);
                    if t1 != t2 {
                        s += (t1 - t2) * (u.get(c) - u.get(nb)) * (v.get(c) - v.get(nb));
                    }
                }
                Some(_) => {}
                None => {
                    if region[c] && grid.label(Face { cell: c, dir }) != FaceLabel::Impedance && s1[a][a] != s2[a][a] {
                        s += 2.0 * h * (s1[a][a] - s2[a][a]) * u.get(c) * v.get(c);
                    }
                }
            }
        }
        if !region[c] {
            continue;
        }
        for i in 0..3 {
            for j in (0..3).filter(|&j| j != i) {
                let d = s1[i][j] - s2[i][j];
                if d != 0.0 {
                    s += vol * d * centered(grid, u, c, i) * centered(grid, v, c, j);
                }
            }
        }
        let dq = m1.effective_q(c) - m2.effective_q(c);
        if dq != 0.0 {
            s -= vol * dq * u.get(c) * v.get(c);
        }
    }
    s
}

fn check_pole_in_d0(aug: &AugmentedDomain, g: &GreenField) -> Result<()> {
    if !aug.d0[g.pole_cell] {
        return Err(Error::invalid(format!("pole {:?} is not in D₀ (inside Ω or outside Ω₀)", g.pole)));
    }
    Ok(())
}

/// Σ-face data of a Green field: `T(G_out − G_in)` and `G_in`, with `T`
/// the face transmissibility and "in" the Ω side.
pub fn sigma_trace(aug: &AugmentedDomain, medium: &MediumField, g: &ComplexField) -> Result<(Vec<C>, Vec<C>)> {
    let grid = g.grid();
    let h = grid.spacing();
    let mut flux = Vec::with_capacity(aug.sigma.len());
    let mut trace = Vec::with_capacity(aug.sigma.len());
    for f in &aug.sigma {
        let out = grid.active_neighbor(f.cell, f.dir).ok_or_else(|| Error::invalid("Σ face has no D₀ neighbor"))?;
        let a = f.dir.axis;
        let t = h * harmonic(medium.effective_sigma(f.cell)[a][a], medium.effective_sigma(out)[a][a]);
        flux.push(t * (g.get(out) - g.get(f.cell)));
        trace.push(g.get(f.cell));
    }
    Ok((flux, trace))
}

/// `S_{U₀}(y, z) = ∫_Σ σ₁∇G₁(·,y)·ν G₂(·,z) − σ₂∇G₂(·,z)·ν G₁(·,y)`,
/// with ν the outer normal of Ω and face fluxes from the two cells
/// straddling Σ.
pub fn s_boundary(aug: &AugmentedDomain, g1: &GreenField, g2: &GreenField, m1: &MediumField, m2: &MediumField) -> Result<C> {
    check_pole_in_d0(aug, g1)?;
    check_pole_in_d0(aug, g2)?;
    let (f1, t1) = sigma_trace(aug, m1, &g1.values)?;
    let (f2, t2) = sigma_trace(aug, m2, &g2.values)?;
    Ok((0..f1.len()).map(|k| f1[k] * t2[k] - f2[k] * t1[k]).sum())
}

/// `∫_Ω (σ₁−σ₂)∇G₁·∇G₂ + ∫_Ω (q₂−q₁)G₁G₂`.
pub fn s_volume(aug: &AugmentedDomain, g1: &GreenField, g2: &GreenField, m1: &MediumField, m2: &MediumField) -> Result<C> {
    check_pole_in_d0(aug, g1)?;
    check_pole_in_d0(aug, g2)?;
    Ok(form_difference(m1, m2, &g1.values, &g2.values, &aug.omega, FaceRule::Both))
}

fn halo(grid: &Grid, pole_cell: usize) -> impl Fn(usize) -> bool + '_ {
    let p = grid.ijk(pole_cell);
    move |c| {
        let q = grid.ijk(c);
        (0..3).all(|a| p[a].abs_diff(q[a]) <= HALO_CELLS)
    }
}

/// The two inclusion integrals and their difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FValue {
    pub s1: C,
    pub s2: C,
    pub f: C,
}

/// `f = S₁ − S₂` for already solved fields `G₁(·,y)` and `G₂(·,z)`, where
/// `S_k = ∫_{D_k} (σ_k − σ_b)∇G₁·∇G₂ + (q_b − q_k)G₁G₂`. Cells in the halo
/// of either pole are skipped.
pub fn f_from_fields(first: &MediumField, second: &MediumField, g1: &GreenField, g2: &GreenField) -> Result<FValue> {
    let grid = g1.grid();
    let (c1, c2) = (first.chi(), second.chi());
    for g in [g1, g2] {
        if c1[g.pole_cell] || c2[g.pole_cell] {
            return Err(Error::invalid(format!("pole {:?} lies inside D₁ ∪ D₂", g.pole)));
        }
    }
    let background = first.background();
    if !background.same_background(second, grid.active()) {
        return Err(Error::invalid("media do not share a background"));
    }
    let (hy, hz) = (halo(grid, g1.pole_cell), halo(grid, g2.pole_cell));
    let region = |chi: &[bool]| -> Vec<bool> { (0..grid.n_cells()).map(|c| chi[c] && !hy(c) && !hz(c)).collect() };
    let s1 = form_difference(first, &background, &g1.values, &g2.values, &region(c1), FaceRule::Either);
    let s2 = form_difference(second, &background, &g1.values, &g2.values, &region(c2), FaceRule::Either);
    Ok(FValue { s1, s2, f: s1 - s2 })
}

/// Solves both Green's functions and evaluates `f(y, z)`.
pub fn f_eval(first: &Configuration, second: &Configuration, y: crate::geometry::Point, z: crate::geometry::Point) -> Result<FValue> {
    let g1 = first.green(y)?;
    let g2 = second.green(z)?;
    f_from_fields(&first.medium, &second.medium, &g1, &g2)
}
