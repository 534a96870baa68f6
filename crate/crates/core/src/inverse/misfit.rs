use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use super::forms::sigma_trace;
use super::Configuration;
use crate::geometry::{AugmentedDomain, Point};
use crate::{Error, Result};

/// A tensor grid of poles at the cell centers of a `counts` subdivision of
/// the box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleGrid {
    pub lo: Point,
    pub hi: Point,
    pub counts: [usize; 3],
}

impl PoleGrid {
    pub fn points(&self) -> Vec<Point> {
        let [nx, ny, nz] = self.counts;
        let mut out = Vec::with_capacity(nx * ny * nz);
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let t = [(i, nx), (j, ny), (k, nz)];
                    out.push([0, 1, 2].map(|a| self.lo[a] + (t[a].0 as f64 + 0.5) * (self.hi[a] - self.lo[a]) / t[a].1 as f64));
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight of one pole.
    pub fn weight(&self) -> f64 {
        (0..3).map(|a| self.hi[a] - self.lo[a]).product::<f64>() / self.len() as f64
    }

    pub fn overlaps(&self, other: &PoleGrid) -> bool {
        (0..3).all(|a| self.lo[a] < other.hi[a] && other.lo[a] < self.hi[a])
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_empty() || (0..3).any(|a| !(self.hi[a] > self.lo[a])) {
            return Err(Error::invalid("degenerate pole grid"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MisfitResult {
    pub value: f64,
    pub y_poles: Vec<Point>,
    pub z_poles: Vec<Point>,
    /// `s[i][j] = S_{U₀}(y_i, z_j)`.
    pub s: Vec<Vec<C>>,
    pub weight: f64,
}

/// `𝒥 = Σ_{i,j} |S_{U₀}(y_i, z_j)|² w_y w_z` with `G₁` from `first` at the
/// `D_y` poles and `G₂` from `second` at the `D_z` poles.
pub fn misfit(aug: &AugmentedDomain, first: &Configuration, second: &Configuration, dy: &PoleGrid, dz: &PoleGrid) -> Result<MisfitResult> {
    dy.validate()?;
    dz.validate()?;
    if dy.overlaps(dz) {
        return Err(Error::invalid("pole grids overlap"));
    }
    let (ys, zs) = (dy.points(), dz.points());
    for p in ys.iter().chain(&zs) {
        if !aug.in_d0(*p) {
            return Err(Error::invalid(format!("pole {p:?} is not in D₀")));
        }
    }
    let g1 = first.green_many(&ys)?;
    let g2 = second.green_many(&zs)?;
    let d1 = g1.iter().map(|g| sigma_trace(aug, &first.medium, &g.values)).collect::<Result<Vec<_>>>()?;
    let d2 = g2.iter().map(|g| sigma_trace(aug, &second.medium, &g.values)).collect::<Result<Vec<_>>>()?;
    let s: Vec<Vec<C>> = d1
        .iter()
        .map(|(f1, t1)| d2.iter().map(|(f2, t2)| (0..f1.len()).map(|k| f1[k] * t2[k] - f2[k] * t1[k]).sum()).collect())
        .collect();
    let weight = dy.weight() * dz.weight();
    let value = s.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>() * weight;
    Ok(MisfitResult { value, y_poles: ys, z_poles: zs, s, weight })
}
