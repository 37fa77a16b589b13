//! Right-hand-side sensitivity solves on the optimal basis.
//!
//! At an optimum where the active set is stable under a small RHS change,
//! the response solves the square basis system taken from the final simplex
//! basis. The factorization is built once and reused for any number of
//! right-hand sides; solving is a pair of triangular substitutions per RHS.

use crate::error::LpError;
use crate::lu::SparseLu;
use crate::scalar::Real;
use crate::stats;

use super::{BasisEntry, LpSolution, StandardFormLp};

/// Sparse right-hand-side perturbation `Δb`, entries `(row, value)`.
pub type SparseRhs<S> = [(usize, S)];

/// Reusable factorization of the optimal simplex basis.
///
/// Immutable after construction; `solve` takes `&self` and may be called
/// concurrently from several threads.
#[derive(Debug)]
pub struct BasisSystem<S> {
    lu: SparseLu<S>,
    basis: Vec<BasisEntry>,
    n_cols: usize,
}

impl<S: Real> BasisSystem<S> {
    /// Factorize the basis recorded in `sol`. Counts as one basis
    /// factorization in the instrumentation counters.
    pub fn new(lp: &StandardFormLp<S>, sol: &LpSolution<S>) -> Result<Self, LpError> {
        assert!(sol.is_optimal(), "basis system requires an optimal solution");
        let m = lp.n_rows();
        assert_eq!(sol.basis.len(), m, "basis size must match the row count");
        let lu = SparseLu::factorize(m, |k, out| match sol.basis[k] {
            BasisEntry::Column(j) => out.extend(lp.matrix.col(j)),
            BasisEntry::Slack(row) => out.push((row, S::one())),
            BasisEntry::Artificial { row, negated } => {
                out.push((row, if negated { -S::one() } else { S::one() }))
            }
        })
        .map_err(|col| LpError::SingularBasis { col })?;
        stats::record_basis_factorization();
        Ok(BasisSystem {
            lu,
            basis: sol.basis.clone(),
            n_cols: lp.n_cols(),
        })
    }

    /// Solve for the structural response `Δx` to the RHS change `Δb`.
    /// Nonbasic columns do not move; basic slack responses are dropped.
    pub fn solve(&self, delta_b: &SparseRhs<S>) -> Vec<S> {
        let m = self.lu.n();
        let mut rhs = vec![S::zero(); m];
        for &(row, v) in delta_b {
            assert!(row < m, "Δb row {row} out of range");
            rhs[row] = rhs[row] + v;
        }
        let z = self.lu.solve(&rhs);
        let mut dx = vec![S::zero(); self.n_cols];
        for (p, entry) in self.basis.iter().enumerate() {
            if let BasisEntry::Column(j) = entry {
                dx[*j] = z[p];
            }
        }
        dx
    }
}

/// One-off sensitivity solve; prefer [`BasisSystem`] when several
/// right-hand sides share one optimum.
pub fn basis_solve<S: Real>(
    lp: &StandardFormLp<S>,
    sol: &LpSolution<S>,
    delta_b: &SparseRhs<S>,
) -> Result<Vec<S>, LpError> {
    Ok(BasisSystem::new(lp, sol)?.solve(delta_b))
}
