//! Sparse LU factorization with partial pivoting.
//!
//! Left-looking factorization of a square matrix given column by column.
//! One factorization serves many right-hand sides: both plain solves (for
//! simplex FTRAN and the trace system) and transposed solves (BTRAN).

use crate::scalar::{real, Real};

/// LU factors of a square matrix `A` with row permutation `P`, `P A = L U`.
#[derive(Debug, Clone)]
pub struct SparseLu<S> {
    n: usize,
    /// position -> original row chosen as pivot
    row_of_pos: Vec<usize>,
    /// original row -> position
    pos_of_row: Vec<usize>,
    /// L columns in original row indices, strictly below the pivot, unit diagonal implicit
    l_cols: Vec<Vec<(usize, S)>>,
    /// U columns in position indices, strictly above the diagonal
    u_cols: Vec<Vec<(usize, S)>>,
    diag: Vec<S>,
}

impl<S: Real> SparseLu<S> {
    /// Factorize an `n × n` matrix. `col_fn` must fill the scratch vector with
    /// the `(row, value)` nonzeros of the requested column.
    ///
    /// Returns `Err(k)` when no acceptable pivot exists in column `k`.
    pub fn factorize(
        n: usize,
        mut col_fn: impl FnMut(usize, &mut Vec<(usize, S)>),
    ) -> Result<Self, usize> {
        let mut lu = SparseLu {
            n,
            row_of_pos: Vec::with_capacity(n),
            pos_of_row: vec![usize::MAX; n],
            l_cols: Vec::with_capacity(n),
            u_cols: Vec::with_capacity(n),
            diag: Vec::with_capacity(n),
        };
        let mut work = vec![S::zero(); n];
        let mut touched: Vec<usize> = Vec::with_capacity(n);
        let mut scratch: Vec<(usize, S)> = Vec::new();
        let pivot_floor = S::epsilon().powf(real(0.75));

        for k in 0..n {
            scratch.clear();
            col_fn(k, &mut scratch);
            let mut col_scale = S::one();
            for &(r, v) in &scratch {
                debug_assert!(r < n);
                if work[r] == S::zero() {
                    touched.push(r);
                }
                work[r] = work[r] + v;
                col_scale = col_scale.max(v.abs());
            }

            // Forward-eliminate with all previous pivots in position order.
            let mut u_col = Vec::new();
            for p in 0..k {
                let rp = lu.row_of_pos[p];
                let upk = work[rp];
                if upk != S::zero() {
                    u_col.push((p, upk));
                    work[rp] = S::zero();
                    for &(r, lval) in &lu.l_cols[p] {
                        if work[r] == S::zero() {
                            touched.push(r);
                        }
                        work[r] = work[r] - lval * upk;
                    }
                }
            }

            // Partial pivoting over the not yet pivoted rows.
            let mut best_row = usize::MAX;
            let mut best_val = S::zero();
            for &r in &touched {
                if lu.pos_of_row[r] == usize::MAX && work[r].abs() > best_val {
                    best_val = work[r].abs();
                    best_row = r;
                }
            }
            if best_row == usize::MAX || best_val <= pivot_floor * col_scale.max(S::one()) {
                return Err(k);
            }

            let pivot = work[best_row];
            let mut l_col = Vec::new();
            for &r in &touched {
                let v = work[r];
                work[r] = S::zero();
                if v != S::zero() && r != best_row && lu.pos_of_row[r] == usize::MAX {
                    l_col.push((r, v / pivot));
                }
            }
            touched.clear();
            l_col.sort_by_key(|&(r, _)| r);

            lu.pos_of_row[best_row] = k;
            lu.row_of_pos.push(best_row);
            lu.diag.push(pivot);
            lu.l_cols.push(l_col);
            lu.u_cols.push(u_col);
        }
        Ok(lu)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solve `A x = b`; `x[k]` corresponds to input column `k`.
    pub fn solve(&self, b: &[S]) -> Vec<S> {
        assert_eq!(b.len(), self.n);
        let mut work = b.to_vec();
        let mut y = vec![S::zero(); self.n];
        for p in 0..self.n {
            let v = work[self.row_of_pos[p]];
            y[p] = v;
            if v != S::zero() {
                for &(r, lval) in &self.l_cols[p] {
                    work[r] = work[r] - lval * v;
                }
            }
        }
        for k in (0..self.n).rev() {
            let xk = y[k] / self.diag[k];
            y[k] = xk;
            if xk != S::zero() {
                for &(p, uval) in &self.u_cols[k] {
                    y[p] = y[p] - uval * xk;
                }
            }
        }
        y
    }

    /// Solve `Aᵀ y = c`; `c[k]` indexed by column, `y` by row.
    pub fn solve_transpose(&self, c: &[S]) -> Vec<S> {
        assert_eq!(c.len(), self.n);
        // Uᵀ w = c, forward in position order.
        let mut w = vec![S::zero(); self.n];
        for k in 0..self.n {
            let mut acc = c[k];
            for &(p, uval) in &self.u_cols[k] {
                acc = acc - uval * w[p];
            }
            w[k] = acc / self.diag[k];
        }
        // Lᵀ v = w, backward in position order (in-place on w).
        for p in (0..self.n).rev() {
            let mut acc = w[p];
            for &(r, lval) in &self.l_cols[p] {
                acc = acc - lval * w[self.pos_of_row[r]];
            }
            w[p] = acc;
        }
        // Undo the row permutation.
        let mut y = vec![S::zero(); self.n];
        for p in 0..self.n {
            y[self.row_of_pos[p]] = w[p];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
        let mut x = b.to_vec();
        for k in 0..n {
            let piv = (k..n)
                .max_by(|&i, &j| m[i][k].abs().partial_cmp(&m[j][k].abs()).unwrap())
                .unwrap();
            m.swap(k, piv);
            x.swap(k, piv);
            for i in k + 1..n {
                let f = m[i][k] / m[k][k];
                for j in k..n {
                    m[i][j] -= f * m[k][j];
                }
                x[i] -= f * x[k];
            }
        }
        for k in (0..n).rev() {
            for j in k + 1..n {
                x[k] -= m[k][j] * x[j];
            }
            x[k] /= m[k][k];
        }
        x
    }

    fn lu_of(a: &[Vec<f64>]) -> SparseLu<f64> {
        let n = a.len();
        SparseLu::factorize(n, |k, out| {
            for (r, row) in a.iter().enumerate() {
                if row[k] != 0.0 {
                    out.push((r, row[k]));
                }
            }
        })
        .unwrap()
    }

    #[test]
    fn matches_dense_oracle() {
        let mut seed = 42u64;
        let mut rng = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for trial in 0..50 {
            let n = 2 + trial % 9;
            let mut a = vec![vec![0.0f64; n]; n];
            for (i, row) in a.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    let r = rng();
                    // keep it sparse-ish but nonsingular
                    if i == j || r.abs() > 0.4 {
                        *v = r + if i == j { 2.0 } else { 0.0 };
                    }
                }
            }
            let b: Vec<f64> = (0..n).map(|_| rng()).collect();
            let lu = lu_of(&a);
            let x = lu.solve(&b);
            let x_ref = dense_solve(&a, &b);
            for (xi, ri) in x.iter().zip(&x_ref) {
                assert!((xi - ri).abs() < 1e-9, "solve mismatch: {x:?} vs {x_ref:?}");
            }
            let y = lu.solve_transpose(&b);
            let at: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a[j][i]).collect()).collect();
            let y_ref = dense_solve(&at, &b);
            for (yi, ri) in y.iter().zip(&y_ref) {
                assert!((yi - ri).abs() < 1e-9, "transpose mismatch");
            }
        }
    }

    #[test]
    fn reports_singular_column() {
        // Second column is a multiple of the first.
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        let err = SparseLu::<f64>::factorize(2, |k, out| {
            for (r, row) in a.iter().enumerate() {
                out.push((r, row[k]));
            }
        })
        .unwrap_err();
        assert_eq!(err, 1);
    }
}
