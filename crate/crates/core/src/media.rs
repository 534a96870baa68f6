//! Piecewise coefficient fields σ = (a_b + (a_D − a_b)χ_D)·A and
//! q = q_b + (q_D − q_b)χ_D, sampled at cell centers.

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::geometry::{AugmentedDomain, Grid, InclusionShape, Point};
use crate::{Error, Result};

pub type Tensor = [[f64; 3]; 3];

pub const IDENTITY: Tensor = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub fn scaled(t: &Tensor, s: f64) -> Tensor {
    let mut out = *t;
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    out
}

/// A scalar coefficient: a constant, or affine in position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarSpec {
    Constant(f64),
    Affine { value: f64, gradient: Point },
}

impl ScalarSpec {
    pub fn eval(&self, p: Point) -> f64 {
        match self {
            ScalarSpec::Constant(v) => *v,
            ScalarSpec::Affine { value, gradient } => {
                value + gradient[0] * p[0] + gradient[1] * p[1] + gradient[2] * p[2]
            }
        }
    }
}

/// The structural tensor A: a diagonal triple or a full symmetric matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TensorSpec {
    Diagonal([f64; 3]),
    Full(Tensor),
}

impl Default for TensorSpec {
    fn default() -> Self {
        TensorSpec::Diagonal([1.0; 3])
    }
}

impl TensorSpec {
    pub fn tensor(&self) -> Result<Tensor> {
        match self {
            TensorSpec::Diagonal(d) => Ok([[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]]),
            TensorSpec::Full(t) => {
                for i in 0..3 {
                    for j in 0..i {
                        if t[i][j] != t[j][i] {
                            return Err(Error::invalid("tensor A is not symmetric"));
                        }
                    }
                }
                Ok(*t)
            }
        }
    }
}

fn one() -> ScalarSpec {
    ScalarSpec::Constant(1.0)
}
fn two() -> ScalarSpec {
    ScalarSpec::Constant(2.0)
}
fn zero() -> ScalarSpec {
    ScalarSpec::Constant(0.0)
}
fn default_gamma() -> f64 {
    10.0
}
fn default_eta() -> f64 {
    0.1
}
fn default_lambda() -> f64 {
    20.0
}

/// Background and inclusion coefficients plus the a priori bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSpec {
    #[serde(default = "one")]
    pub a_b: ScalarSpec,
    #[serde(default = "two")]
    pub a_d: ScalarSpec,
    #[serde(default)]
    pub tensor: TensorSpec,
    #[serde(default = "zero")]
    pub q_b: ScalarSpec,
    #[serde(default = "zero")]
    pub q_d: ScalarSpec,
    #[serde(default = "default_gamma")]
    pub gamma_bar: f64,
    #[serde(default = "default_eta")]
    pub eta0: f64,
    #[serde(default = "default_lambda")]
    pub lambda_bar: f64,
}

impl Default for MediumSpec {
    fn default() -> Self {
        MediumSpec {
            a_b: one(),
            a_d: two(),
            tensor: TensorSpec::default(),
            q_b: zero(),
            q_d: zero(),
            gamma_bar: default_gamma(),
            eta0: default_eta(),
            lambda_bar: default_lambda(),
        }
    }
}

/// Coefficients of one cell before χ_D selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellCoefficients {
    pub a_b: f64,
    pub a_d: f64,
    pub tensor: Tensor,
    pub q_b: f64,
    pub q_d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub gamma_bar: f64,
    pub eta0: f64,
    pub lambda_bar: f64,
}

/// Per-cell coefficient record over every cell of a grid.
#[derive(Debug, Clone)]
pub struct MediumField {
    a_b: Vec<f64>,
    a_d: Vec<f64>,
    tensor: Vec<Tensor>,
    q_b: Vec<f64>,
    q_d: Vec<f64>,
    chi: Vec<bool>,
    d0: Vec<bool>,
    bounds: Bounds,
    potential_off: bool,
}

/// Samples a spec on the augmented domain and checks the a priori bounds on
/// every Ω cell. D₀ cells carry σ = I, q = 1.
pub fn build_medium(spec: &MediumSpec, aug: &AugmentedDomain, inclusion: &InclusionShape) -> Result<MediumField> {
    let medium = MediumField::from_spec(spec, aug.grid(), &inclusion.mask, &aug.d0)?;
    medium.validate(&aug.omega)?;
    Ok(medium)
}

impl MediumField {
    /// Samples a spec on `grid` without validating the bounds.
    pub fn from_spec(spec: &MediumSpec, grid: &Grid, chi: &[bool], d0: &[bool]) -> Result<Self> {
        let tensor = spec.tensor.tensor()?;
        let bounds = Bounds { gamma_bar: spec.gamma_bar, eta0: spec.eta0, lambda_bar: spec.lambda_bar };
        MediumField::sampled(grid, chi, d0, bounds, |p| CellCoefficients {
            a_b: spec.a_b.eval(p),
            a_d: spec.a_d.eval(p),
            tensor,
            q_b: spec.q_b.eval(p),
            q_d: spec.q_d.eval(p),
        })
    }

    /// Samples arbitrary closed-form coefficients at cell centers.
    pub fn sampled(
        grid: &Grid,
        chi: &[bool],
        d0: &[bool],
        bounds: Bounds,
        f: impl Fn(Point) -> CellCoefficients,
    ) -> Result<Self> {
        let n = grid.n_cells();
        if chi.len() != n || d0.len() != n {
            return Err(Error::invalid("mask length does not match grid"));
        }
        let mut m = MediumField {
            a_b: Vec::with_capacity(n),
            a_d: Vec::with_capacity(n),
            tensor: Vec::with_capacity(n),
            q_b: Vec::with_capacity(n),
            q_d: Vec::with_capacity(n),
            chi: chi.to_vec(),
            d0: d0.to_vec(),
            bounds,
            potential_off: false,
        };
        for c in 0..n {
            let k = f(grid.center(c));
            m.a_b.push(k.a_b);
            m.a_d.push(k.a_d);
            m.tensor.push(k.tensor);
            m.q_b.push(k.q_b);
            m.q_d.push(k.q_d);
        }
        Ok(m)
    }

    /// Uniform σ = `sigma`, q = `q` on every cell, no inclusion, no D₀.
    pub fn homogeneous(grid: &Grid, sigma: Tensor, q: f64) -> Self {
        let n = grid.n_cells();
        MediumField {
            a_b: vec![1.0; n],
            a_d: vec![1.0; n],
            tensor: vec![sigma; n],
            q_b: vec![q; n],
            q_d: vec![q; n],
            chi: vec![false; n],
            d0: vec![false; n],
            bounds: Bounds { gamma_bar: f64::INFINITY, eta0: 0.0, lambda_bar: f64::INFINITY },
            potential_off: false,
        }
    }

    /// Checks the four a priori bounds on every cell of `omega`.
    pub fn validate(&self, omega: &[bool]) -> Result<()> {
        let Bounds { gamma_bar, eta0, lambda_bar } = self.bounds;
        for c in (0..self.n_cells()).filter(|&c| omega[c] && !self.d0[c]) {
            for (name, a) in [("a_b", self.a_b[c]), ("a_D", self.a_d[c])] {
                if !(a >= 1.0 / gamma_bar && a <= gamma_bar) {
                    return Err(Error::Bound { cell: c, what: format!("{name} = {a} outside [1/γ̄, γ̄], γ̄ = {gamma_bar}") });
                }
            }
            let jump = self.a_d[c] - self.a_b[c];
            if jump * jump < eta0 * eta0 {
                return Err(Error::Bound { cell: c, what: format!("η₀ jump condition violated: |a_D − a_b| = {} < {eta0}", jump.abs()) });
            }
            for (name, q) in [("q_b", self.q_b[c]), ("q_D", self.q_d[c])] {
                if !(q.abs() <= gamma_bar) {
                    return Err(Error::Bound { cell: c, what: format!("|{name}| = {} exceeds γ̄ = {gamma_bar}", q.abs()) });
                }
            }
            let (lo, hi) = eigen_range(&self.effective_sigma(c));
            if !(lo >= 1.0 / lambda_bar && hi <= lambda_bar) {
                return Err(Error::Bound {
                    cell: c,
                    what: format!("ellipticity violated: σ spectrum [{lo}, {hi}] not within [1/λ̄, λ̄], λ̄ = {lambda_bar}"),
                });
            }
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.chi.len()
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn chi(&self) -> &[bool] {
        &self.chi
    }

    pub fn d0(&self) -> &[bool] {
        &self.d0
    }

    pub fn tensor_a(&self, c: usize) -> Tensor {
        self.tensor[c]
    }

    /// Scalar factor a_b or a_D selected by χ_D (1 on D₀).
    pub fn scalar_a(&self, c: usize) -> f64 {
        if self.d0[c] {
            1.0
        } else if self.chi[c] {
            self.a_d[c]
        } else {
            self.a_b[c]
        }
    }

    pub fn effective_sigma(&self, c: usize) -> Tensor {
        if self.d0[c] {
            return IDENTITY;
        }
        scaled(&self.tensor[c], self.scalar_a(c))
    }

    pub fn effective_q(&self, c: usize) -> f64 {
        if self.potential_off {
            0.0
        } else if self.d0[c] {
            1.0
        } else if self.chi[c] {
            self.q_d[c]
        } else {
            self.q_b[c]
        }
    }

    /// The same coefficients with χ_D cleared.
    pub fn background(&self) -> MediumField {
        let mut m = self.clone();
        m.chi.iter_mut().for_each(|x| *x = false);
        m
    }

    /// The same medium with q ≡ 0 everywhere, D₀ included.
    pub fn without_potential(&self) -> MediumField {
        let mut m = self.clone();
        m.potential_off = true;
        m
    }

    /// True when both media share a_b, A and q_b on every cell of `mask`.
    pub fn same_background(&self, other: &MediumField, mask: &[bool]) -> bool {
        (0..self.n_cells()).filter(|&c| mask[c]).all(|c| {
            self.a_b[c] == other.a_b[c]
                && self.tensor[c] == other.tensor[c]
                && self.q_b[c] == other.q_b[c]
                && self.d0[c] == other.d0[c]
        })
    }

    /// Largest |σ_ij − σ_ji| over all cells.
    pub fn max_asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for c in 0..self.n_cells() {
            let s = self.effective_sigma(c);
            for i in 0..3 {
                for j in 0..3 {
                    m = m.max((s[i][j] - s[j][i]).abs());
                }
            }
        }
        m
    }

    /// Per-cell dump of a scalar quantity over `grid` cells.
    pub fn dump_values(&self, what: &str) -> Result<Vec<f64>> {
        let n = self.n_cells();
        let f: Box<dyn Fn(usize) -> f64> = match what {
            "sigma_trace" => Box::new(|c| {
                let s = self.effective_sigma(c);
                s[0][0] + s[1][1] + s[2][2]
            }),
            "a" => Box::new(|c| self.scalar_a(c)),
            "q" => Box::new(|c| self.effective_q(c)),
            "chi" => Box::new(|c| if self.chi[c] { 1.0 } else { 0.0 }),
            _ => return Err(Error::invalid(format!("unknown medium field '{what}'"))),
        };
        Ok((0..n).map(f).collect())
    }
}

/// Smallest and largest eigenvalue of a symmetric 3×3 tensor.
pub fn eigen_range(t: &Tensor) -> (f64, f64) {
    let m = Matrix3::from_fn(|i, j| t[i][j]);
    let e = SymmetricEigen::new(m).eigenvalues;
    (e.min(), e.max())
}
