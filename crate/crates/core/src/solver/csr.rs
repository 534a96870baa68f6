use num_complex::Complex64;

use crate::exec::Execution;

/// Square sparse matrix in compressed row form with sorted column indices.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<Complex64>,
}

impl CsrMatrix {
    /// Builds from per-row entry lists; duplicates within a row are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, Complex64)>>) -> Self {
        let n = rows.len();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix { n, indptr, indices, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[Complex64]) {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let (idx, val) = self.row(r);
        match idx.binary_search(&c) {
            Ok(k) => val[k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    pub fn matvec(&self, x: &[Complex64], exec: Execution) -> Vec<Complex64> {
        exec.map_range(self.n, |r| {
            let (idx, val) = self.row(r);
            idx.iter().zip(val).map(|(&c, v)| v * x[c]).sum()
        })
    }

    /// max |M_ij − M_ji| / max |M_ij|.
    pub fn relative_asymmetry(&self) -> f64 {
        let mut scale: f64 = 0.0;
        let mut diff: f64 = 0.0;
        for r in 0..self.n {
            let (idx, val) = self.row(r);
            for (&c, v) in idx.iter().zip(val) {
                scale = scale.max(v.norm());
                diff = diff.max((v - self.get(c, r)).norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            diff / scale
        }
    }

    /// Induced 1-norm (max column sum).
    pub fn norm1(&self) -> f64 {
        let mut col = vec![0.0; self.n];
        for (c, v) in self.indices.iter().zip(&self.values) {
            col[*c] += v.norm();
        }
        col.into_iter().fold(0.0, f64::max)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.n).flat_map(move |r| {
            let (idx, val) = self.row(r);
            idx.iter().zip(val).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub(crate) fn parts(&self) -> (&[usize], &[usize], &[Complex64]) {
        (&self.indptr, &self.indices, &self.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn duplicates_are_summed_and_sorted() {
        let m = CsrMatrix::from_rows(vec![vec![(1, c(1.0)), (0, c(2.0)), (1, c(3.0))], vec![(0, c(4.0))]]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 1), c(4.0));
        assert_eq!(m.get(1, 1), c(0.0));
        assert_eq!(m.matvec(&[c(1.0), c(1.0)], Execution::Sequential), vec![c(6.0), c(4.0)]);
        assert_eq!(m.norm1(), 6.0);
        assert!((m.relative_asymmetry() - 0.0).abs() < 1e-15);
    }
}
