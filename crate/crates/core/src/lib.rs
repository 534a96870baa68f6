//! Numerical laboratory for inclusion determination in
//! `div(σ∇u) + q u = 0` from local boundary data.
//!
//! The crate is organized bottom-up:
//!
//! * [`geometry`]: uniform grids, inclusion masks, the augmented domain
//!   `Ω₀ = Ω ∪ D₀` and set distances (Hausdorff and modified).
//! * [`media`]: piecewise coefficient fields `σ = (a_b + (a_D − a_b)χ_D)A`
//!   and `q = q_b + (q_D − q_b)χ_D` with a priori bound checks.
//! * [`solver`]: cell-centered finite volumes with Dirichlet and complex
//!   impedance boundary conditions, sparse direct and Krylov solves.
//! * [`green`]: Green's functions on `Ω₀` by a direct solve and by the
//!   recursive `G̃ + Σ R_j` construction, reciprocity and decay checks.
//! * [`fundsol`]: the explicit two-phase anisotropic fundamental solution
//!   with an image pole.
//! * [`inverse`]: boundary/volume forms, `f = S₁ − S₂`, the misfit
//!   functional, Cauchy-data aperture, singular-source probing and
//!   stability sweeps.

pub mod error;
pub mod exec;
pub mod fit;
pub mod fundsol;
pub mod geometry;
pub mod green;
pub mod inverse;
pub mod io;
pub mod media;
pub mod solver;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Spatial dimension of every shipped configuration.
pub const DIM: usize = 3;
