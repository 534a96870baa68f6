use num_complex::Complex64;

use super::csr::CsrMatrix;
use crate::exec::Execution;
use crate::{Error, Result};

type C = Complex64;

/// Zero fill-in incomplete LU on the sparsity pattern of the matrix.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C>,
    diag_pos: Vec<usize>,
}

impl Ilu0 {
    pub fn new(m: &CsrMatrix) -> Result<Self> {
        let (indptr, indices, values) = m.parts();
        let n = m.dim();
        let mut lu = values.to_vec();
        let mut diag_pos = vec![usize::MAX; n];
        for r in 0..n {
            for k in indptr[r]..indptr[r + 1] {
                if indices[k] == r {
                    diag_pos[r] = k;
                }
            }
            if diag_pos[r] == usize::MAX {
                return Err(Error::Breakdown(format!("ILU(0): missing diagonal in row {r}")));
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (a, b) = (indptr[i], indptr[i + 1]);
            for k in a..b {
                pos[indices[k]] = k;
            }
            for kk in a..b {
                let k = indices[kk];
                if k >= i {
                    break;
                }
                let piv = lu[diag_pos[k]];
                if piv.norm() == 0.0 {
                    return Err(Error::Breakdown(format!("ILU(0): zero pivot in row {k}")));
                }
                let lik = lu[kk] / piv;
                lu[kk] = lik;
                for jj in diag_pos[k] + 1..indptr[k + 1] {
                    let p = pos[indices[jj]];
                    if p != usize::MAX {
                        let u = lu[jj];
                        lu[p] -= lik * u;
                    }
                }
            }
            for k in a..b {
                pos[indices[k]] = usize::MAX;
            }
            if lu[diag_pos[i]].norm() == 0.0 {
                return Err(Error::Breakdown(format!("ILU(0): zero pivot in row {i}")));
            }
        }
        Ok(Ilu0 { indptr: indptr.to_vec(), indices: indices.to_vec(), values: lu, diag_pos })
    }

    /// Applies (LU)⁻¹.
    pub fn apply(&self, b: &[C]) -> Vec<C> {
        let n = b.len();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in self.indptr[i]..self.diag_pos[i] {
                s -= self.values[k] * y[self.indices[k]];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in self.diag_pos[i] + 1..self.indptr[i + 1] {
                s -= self.values[k] * y[self.indices[k]];
            }
            y[i] = s / self.values[self.diag_pos[i]];
        }
        y
    }
}

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct KrylovReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Right-preconditioned BiCGStab. Converges when ‖b − Ax‖ ≤ tol·‖b‖.
pub fn bicgstab(
    a: &CsrMatrix,
    pre: &Ilu0,
    b: &[C],
    x0: Option<&[C]>,
    tol: f64,
    max_iter: usize,
    exec: Execution,
) -> Result<(Vec<C>, KrylovReport)> {
    let n = b.len();
    let zero = C::new(0.0, 0.0);
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((vec![zero; n], KrylovReport { iterations: 0, relative_residual: 0.0 }));
    }
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![zero; n]);
    let ax = a.matvec(&x, exec);
    let mut r: Vec<C> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let rhat = r.clone();
    let (mut rho, mut alpha, mut omega) = (C::new(1.0, 0.0), C::new(1.0, 0.0), C::new(1.0, 0.0));
    let mut v = vec![zero; n];
    let mut p = vec![zero; n];
    let tiny = 1e-300;
    for it in 1..=max_iter {
        let rho_new = dot(&rhat, &r);
        if rho_new.norm() < tiny {
            return Err(Error::Breakdown("BiCGStab: ρ vanished".into()));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let phat = pre.apply(&p);
        v = a.matvec(&phat, exec);
        let rv = dot(&rhat, &v);
        if rv.norm() < tiny {
            return Err(Error::Breakdown("BiCGStab: ⟨r̂, v⟩ vanished".into()));
        }
        alpha = rho_new / rv;
        let s: Vec<C> = r.iter().zip(&v).map(|(r, v)| r - alpha * v).collect();
        if norm(&s) <= tol * bnorm {
            for i in 0..n {
                x[i] += alpha * phat[i];
            }
            return Ok((x, KrylovReport { iterations: it, relative_residual: norm(&s) / bnorm }));
        }
        let shat = pre.apply(&s);
        let t = a.matvec(&shat, exec);
        let tt = dot(&t, &t);
        if tt.norm() < tiny {
            return Err(Error::Breakdown("BiCGStab: ‖t‖ vanished".into()));
        }
        omega = dot(&t, &s) / tt;
        if omega.norm() < tiny {
            return Err(Error::Breakdown("BiCGStab: ω vanished".into()));
        }
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        rho = rho_new;
        let rel = norm(&r) / bnorm;
        if !rel.is_finite() {
            return Err(Error::Breakdown("BiCGStab: non-finite residual".into()));
        }
        if rel <= tol {
            return Ok((x, KrylovReport { iterations: it, relative_residual: rel }));
        }
    }
    Err(Error::Breakdown(format!("BiCGStab: no convergence to {tol:e} in {max_iter} iterations")))
}
