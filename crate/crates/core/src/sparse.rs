//! Minimal column-compressed sparse matrix used by the solvers.

use crate::scalar::Real;

/// Sparse matrix with entries stored by column (CSC).
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix<S> {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<S>,
}

impl<S: Real> CscMatrix<S> {
    /// Build from coordinate triplets; duplicate entries are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, S)]) -> Self {
        let mut per_col: Vec<Vec<(usize, S)>> = vec![Vec::new(); ncols];
        for &(r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of bounds");
            per_col[c].push((r, v));
        }
        let mut col_ptr = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        col_ptr.push(0);
        for col in per_col.iter_mut() {
            col.sort_by_key(|&(r, _)| r);
            let mut i = 0;
            while i < col.len() {
                let r = col[i].0;
                let mut v = col[i].1;
                let mut j = i + 1;
                while j < col.len() && col[j].0 == r {
                    v = v + col[j].1;
                    j += 1;
                }
                if v != S::zero() {
                    row_idx.push(r);
                    values.push(v);
                }
                i = j;
            }
            col_ptr.push(row_idx.len());
        }
        CscMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterate over the nonzeros of one column as `(row, value)`.
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, S)> + '_ {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// y = A x (dense input and output).
    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![S::zero(); self.nrows];
        for j in 0..self.ncols {
            let xj = x[j];
            if xj != S::zero() {
                for (r, v) in self.col(j) {
                    y[r] = y[r] + v * xj;
                }
            }
        }
        y
    }

    /// yᵀ = xᵀ A, i.e. one inner product per column.
    pub fn tmul_vec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.nrows);
        (0..self.ncols)
            .map(|j| self.col(j).map(|(r, v)| v * x[r]).sum())
            .collect()
    }

    /// Inner product of a single column with a dense vector.
    pub fn col_dot(&self, j: usize, x: &[S]) -> S {
        self.col(j).map(|(r, v)| v * x[r]).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = CscMatrix::<f64>::from_triplets(
            3,
            2,
            &[(2, 0, 1.0), (0, 0, 2.0), (2, 0, 0.5), (1, 1, -1.0)],
        );
        let col0: Vec<_> = m.col(0).collect();
        assert_eq!(col0, vec![(0, 2.0), (2, 1.5)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.mul_vec(&[1.0, 2.0]), vec![2.0, -2.0, 1.5]);
        assert_eq!(m.tmul_vec(&[1.0, 1.0, 1.0]), vec![3.5, -1.0]);
    }
}
