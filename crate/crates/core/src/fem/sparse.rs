//! Compressed sparse column storage and the direct solver.

use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use num_complex::Complex64;

use crate::error::FemError;

#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<Complex64>,
}

impl CscMatrix {
    /// Builds the matrix, summing duplicate entries in input order so the
    /// result is deterministic.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trips: Vec<(usize, usize, Complex64)>) -> Self {
        trips.sort_by_key(|&(i, j, _)| (j, i));
        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::with_capacity(trips.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in trips {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of range");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(i);
                values.push(v);
                col_ptr[j + 1] += 1;
                last = Some((i, j));
            }
        }
        for j in 0..ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        Self { nrows, ncols, col_ptr, row_idx, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let rows = &self.row_idx[self.col_ptr[j]..self.col_ptr[j + 1]];
        match rows.binary_search(&i) {
            Ok(p) => self.values[self.col_ptr[j] + p],
            Err(_) => Complex64::default(),
        }
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![Complex64::default(); self.nrows];
        for (j, xj) in x.iter().enumerate() {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[p]] += self.values[p] * xj;
            }
        }
        y
    }

    /// `max |A_ij − A_ji| / max |A_ij|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..self.ncols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[p];
                scale = scale.max(self.values[p].norm());
                worst = worst.max((self.values[p] - self.get(j, i)).norm());
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, Complex64>, FemError> {
        let mut trips = Vec::with_capacity(self.nnz());
        for j in 0..self.ncols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                trips.push(Triplet::new(self.row_idx[p], j, self.values[p]));
            }
        }
        SparseColMat::<usize, Complex64>::try_new_from_triplets(self.nrows, self.ncols, &trips)
            .map_err(|e| FemError::Singular(format!("matrix construction: {e:?}")))
    }
}

/// Sparse LU factorization with fill-reducing ordering.
pub struct SparseLu {
    lu: Lu<usize, Complex64>,
    n: usize,
}

impl SparseLu {
    pub fn factor(a: &CscMatrix) -> Result<Self, FemError> {
        if a.nrows != a.ncols {
            return Err(FemError::Singular("matrix is not square".into()));
        }
        let lu = a.to_faer()?.sp_lu().map_err(|e| FemError::Singular(format!("{e:?}")))?;
        Ok(Self { lu, n: a.nrows })
    }

    /// Solves for several right-hand sides at once.
    pub fn solve_many(&self, rhs: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        if rhs.is_empty() {
            return Vec::new();
        }
        let mut b = Mat::<Complex64>::zeros(self.n, rhs.len());
        for (j, col) in rhs.iter().enumerate() {
            assert_eq!(col.len(), self.n);
            for (i, v) in col.iter().enumerate() {
                b[(i, j)] = *v;
            }
        }
        self.lu.solve_in_place(b.as_mut());
        (0..rhs.len()).map(|j| (0..self.n).map(|i| b[(i, j)]).collect()).collect()
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        self.solve_many(std::slice::from_ref(&rhs.to_vec())).pop().unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn duplicates_are_summed() {
        let a = CscMatrix::from_triplets(2, 2, vec![(0, 0, c(1.0, 0.0)), (1, 0, c(2.0, 0.0)), (0, 0, c(0.5, 1.0))]);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 0), c(1.5, 1.0));
        assert_eq!(a.get(1, 0), c(2.0, 0.0));
        assert_eq!(a.get(1, 1), c(0.0, 0.0));
    }

    #[test]
    fn lu_solves_small_system() {
        // Tridiagonal complex symmetric test matrix.
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, c(4.0, 0.5 + i as f64 * 0.01)));
            if i + 1 < n {
                t.push((i, i + 1, c(-1.0, 0.2)));
                t.push((i + 1, i, c(-1.0, 0.2)));
            }
        }
        let a = CscMatrix::from_triplets(n, n, t);
        assert_eq!(a.asymmetry(), 0.0);
        let x: Vec<Complex64> = (0..n).map(|i| c((i as f64).sin(), (i as f64).cos())).collect();
        let b = a.matvec(&x);
        let lu = SparseLu::factor(&a).unwrap();
        let y = lu.solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_is_reported_or_nonfinite() {
        let a = CscMatrix::from_triplets(2, 2, vec![(0, 0, c(1.0, 0.0)), (0, 1, c(1.0, 0.0)), (1, 0, c(1.0, 0.0)), (1, 1, c(1.0, 0.0))]);
        match SparseLu::factor(&a) {
            Err(FemError::Singular(_)) => {}
            Ok(lu) => {
                let y = lu.solve(&[c(1.0, 0.0), c(0.0, 0.0)]);
                assert!(y.iter().any(|v| !v.is_finite() || v.norm() > 1e10));
            }
            Err(e) => panic!("unexpected {e}"),
        }
    }
}
