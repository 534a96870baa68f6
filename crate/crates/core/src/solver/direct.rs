use faer::linalg::solvers::SolveCore;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat};
use num_complex::Complex64;

use super::csr::CsrMatrix;
use crate::{Error, Result};

/// Sparse LU factorization backed by faer.
pub struct DirectSolver {
    lu: faer::sparse::linalg::solvers::Lu<usize, Complex64>,
    n: usize,
}

impl std::fmt::Debug for DirectSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirectSolver").field("n", &self.n).finish()
    }
}

impl DirectSolver {
    pub fn factor(m: &CsrMatrix) -> Result<Self> {
        let n = m.dim();
        let trip: Vec<Triplet<usize, usize, Complex64>> = m.triplets().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        let a = SparseColMat::<usize, Complex64>::try_new_from_triplets(n, n, &trip)
            .map_err(|e| Error::invalid(format!("sparse matrix construction failed: {e:?}")))?;
        let lu = a
            .sp_lu()
            .map_err(|e| Error::EigenvalueRegime(format!("LU factorization failed: {e:?}")))?;
        Ok(DirectSolver { lu, n })
    }

    fn solve_with(&self, b: &[Complex64], adjoint: bool) -> Vec<Complex64> {
        let mut x = Mat::<Complex64>::from_fn(self.n, 1, |i, _| b[i]);
        if adjoint {
            self.lu.solve_transpose_in_place_with_conj(Conj::Yes, x.as_mut());
        } else {
            self.lu.solve_in_place_with_conj(Conj::No, x.as_mut());
        }
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        self.solve_with(b, false)
    }

    /// Solves Aᴴx = b.
    pub fn solve_adjoint(&self, b: &[Complex64]) -> Vec<Complex64> {
        self.solve_with(b, true)
    }

    /// Hager–Higham estimate of ‖A⁻¹‖₁ using the factorization.
    pub fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.n;
        let norm1 = |v: &[Complex64]| v.iter().map(|z| z.norm()).sum::<f64>();
        let mut x = vec![Complex64::new(1.0 / n as f64, 0.0); n];
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.solve(&x);
            if y.iter().any(|z| !z.is_finite()) {
                return f64::INFINITY;
            }
            est = norm1(&y);
            let xi: Vec<Complex64> = y
                .iter()
                .map(|z| if z.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { z / z.norm() })
                .collect();
            let z = self.solve_adjoint(&xi);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.norm()))
                .fold((0, -1.0), |acc, e| if e.1 > acc.1 { e } else { acc });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            x = vec![Complex64::new(0.0, 0.0); n];
            x[j] = Complex64::new(1.0, 0.0);
            last_j = j;
        }
        // alternating test vector guards against the classical failure cases
        let alt: Vec<Complex64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                Complex64::new(s * (1.0 + i as f64 / (n.max(2) - 1) as f64), 0.0)
            })
            .collect();
        let y = self.solve(&alt);
        let alt_est = 2.0 * norm1(&y) / (3.0 * n as f64);
        est.max(alt_est)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn small_complex_system() {
        let rows = vec![
            vec![(0, c(4.0, 1.0)), (1, c(1.0, 0.0))],
            vec![(0, c(1.0, 0.0)), (1, c(3.0, -2.0)), (2, c(0.5, 0.0))],
            vec![(1, c(0.5, 0.0)), (2, c(2.0, 0.0))],
        ];
        let m = CsrMatrix::from_rows(rows);
        let s = DirectSolver::factor(&m).unwrap();
        let b = vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, -1.0)];
        let x = s.solve(&b);
        let ax = m.matvec(&x, crate::exec::Execution::Sequential);
        for i in 0..3 {
            assert!((ax[i] - b[i]).norm() < 1e-14);
        }
        // adjoint solve against the dense conjugate transpose
        let dense = DMatrix::from_fn(3, 3, |i, j| m.get(j, i).conj());
        let y = s.solve_adjoint(&b);
        let r = &dense * nalgebra::DVector::from_vec(y) - nalgebra::DVector::from_vec(b);
        assert!(r.norm() < 1e-14);
    }

    #[test]
    fn condition_estimate_matches_dense_inverse() {
        let n = 6;
        let rows: Vec<Vec<(usize, Complex64)>> = (0..n)
            .map(|i| {
                let mut r = vec![(i, c(2.0 + i as f64, 0.5))];
                if i > 0 {
                    r.push((i - 1, c(-1.0, 0.0)));
                }
                if i + 1 < n {
                    r.push((i + 1, c(-1.0, 0.0)));
                }
                r
            })
            .collect();
        let m = CsrMatrix::from_rows(rows);
        let dense = DMatrix::from_fn(n, n, |i, j| m.get(i, j));
        let inv = dense.try_inverse().unwrap();
        let exact = (0..n).map(|j| (0..n).map(|i| inv[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
        let est = DirectSolver::factor(&m).unwrap().inverse_norm1_estimate();
        assert!(est <= exact * (1.0 + 1e-12) && est >= 0.3 * exact, "{est} vs {exact}");
    }
}
