//! Standard-form LP representation and solver interface.
//!
//! An LP is `min cᵀx` subject to tagged rows that are either `a·x ≤ b` or
//! `a·x = b`. Equality rows are kept as native equalities; the row tags
//! preserve what each row means in the energy model so downstream analyses
//! can locate rows by meaning rather than by position.

mod sensitivity;
mod simplex;

pub use sensitivity::{basis_solve, BasisSystem, SparseRhs};

use crate::error::LpError;
use crate::scalar::{real, Real};
use crate::sparse::CscMatrix;

/// Constraint sense of a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RowKind {
    /// `a·x ≤ b`
    Le,
    /// `a·x = b`
    Eq,
}

/// Semantic label of a row, linking it back to the model object it encodes.
///
/// `process` and `commodity` are positions in the originating system's
/// declaration order; `step` is the time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RowTag {
    ProcessBalance { process: usize, commodity: usize, step: usize },
    FlexLower { process: usize, commodity: usize, step: usize },
    FlexUpper { process: usize, commodity: usize, step: usize },
    EnergyBalance { commodity: usize, step: usize },
    Capacity { process: usize, commodity: usize, step: usize },
    NonNegOut { process: usize, commodity: usize, step: usize },
    NonNegIn { commodity: usize, process: usize, step: usize },
    LevelLower { process: usize, step: usize },
    LevelUpper { process: usize, step: usize },
    DemandFix { process: usize, step: usize },
    StorageBalance { process: usize, step: usize },
    Co2Balance,
    /// Free-form tag for hand-built problems.
    Other(u32),
}

/// Semantic label of a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ColTag {
    FlowOut { process: usize, commodity: usize, step: usize },
    FlowIn { commodity: usize, process: usize, step: usize },
    StorageLevel { process: usize, step: usize },
    TotalCo2,
    Other(u32),
}

/// `min cᵀx` over tagged `≤`/`=` rows.
#[derive(Debug, Clone)]
pub struct StandardFormLp<S> {
    pub cost: Vec<S>,
    pub matrix: CscMatrix<S>,
    pub rhs: Vec<S>,
    pub kinds: Vec<RowKind>,
    pub row_tags: Vec<RowTag>,
    pub col_tags: Vec<ColTag>,
}

impl<S: Real> StandardFormLp<S> {
    pub fn n_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cost.len()
    }

    /// `A x − b` for a candidate point.
    pub fn residuals(&self, x: &[S]) -> Vec<S> {
        let ax = self.matrix.mul_vec(x);
        ax.iter().zip(&self.rhs).map(|(&a, &b)| a - b).collect()
    }

    /// Largest violation of the constraints (`max(a·x − b, 0)` for `≤` rows,
    /// `|a·x − b|` for equalities).
    pub fn feasibility_error(&self, x: &[S]) -> S {
        self.residuals(x)
            .iter()
            .zip(&self.kinds)
            .map(|(&r, k)| match k {
                RowKind::Le => r.max(S::zero()),
                RowKind::Eq => r.abs(),
            })
            .fold(S::zero(), S::max)
    }

    pub fn objective_of(&self, x: &[S]) -> S {
        self.cost.iter().zip(x).map(|(&c, &xi)| c * xi).sum()
    }
}

/// Incremental construction of a [`StandardFormLp`].
#[derive(Debug)]
pub struct LpBuilder<S> {
    cost: Vec<S>,
    col_tags: Vec<ColTag>,
    triplets: Vec<(usize, usize, S)>,
    rhs: Vec<S>,
    kinds: Vec<RowKind>,
    row_tags: Vec<RowTag>,
}

impl<S: Real> Default for LpBuilder<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Real> LpBuilder<S> {
    pub fn new() -> Self {
        LpBuilder {
            cost: Vec::new(),
            col_tags: Vec::new(),
            triplets: Vec::new(),
            rhs: Vec::new(),
            kinds: Vec::new(),
            row_tags: Vec::new(),
        }
    }

    pub fn col(&mut self, cost: S, tag: ColTag) -> usize {
        self.cost.push(cost);
        self.col_tags.push(tag);
        self.cost.len() - 1
    }

    pub fn row(&mut self, kind: RowKind, rhs: S, tag: RowTag, entries: &[(usize, S)]) -> usize {
        let r = self.rhs.len();
        for &(c, v) in entries {
            if v != S::zero() {
                self.triplets.push((r, c, v));
            }
        }
        self.rhs.push(rhs);
        self.kinds.push(kind);
        self.row_tags.push(tag);
        r
    }

    pub fn n_cols(&self) -> usize {
        self.cost.len()
    }

    pub fn build(self) -> StandardFormLp<S> {
        let matrix = CscMatrix::from_triplets(self.rhs.len(), self.cost.len(), &self.triplets);
        StandardFormLp {
            cost: self.cost,
            matrix,
            rhs: self.rhs,
            kinds: self.kinds,
            row_tags: self.row_tags,
            col_tags: self.col_tags,
        }
    }
}

/// Solver outcome.
#[derive(Debug, Clone, PartialEq)]
pub enum SolveStatus<S> {
    Optimal,
    /// No feasible point exists; carries the infeasibility multipliers from
    /// the feasibility phase.
    Infeasible { farkas: Vec<S> },
    /// The objective decreases without bound along `ray` (structural space).
    Unbounded { ray: Vec<S> },
}

/// One member of the optimal basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisEntry {
    /// Structural column index.
    Column(usize),
    /// Slack of the given row.
    Slack(usize),
    /// Leftover feasibility-phase artificial pinned at zero (redundant row).
    Artificial { row: usize, negated: bool },
}

/// Primal/dual solution of a [`StandardFormLp`].
///
/// Dual convention: `λ_i ≥ 0` for `≤` rows, free for equalities, with
/// stationarity `c + Aᵀλ = 0` and strong duality `cᵀx* + bᵀλ* = 0`.
#[derive(Debug, Clone)]
pub struct LpSolution<S> {
    pub status: SolveStatus<S>,
    /// Structural primal values (empty unless optimal).
    pub x: Vec<S>,
    /// One multiplier per row (empty unless optimal).
    pub duals: Vec<S>,
    pub objective: S,
    /// Ordered basic columns of the final simplex basis.
    pub basis: Vec<BasisEntry>,
    pub iterations: usize,
}

impl<S: Real> LpSolution<S> {
    pub fn is_optimal(&self) -> bool {
        matches!(self.status, SolveStatus::Optimal)
    }
}

/// Solver parameters. Defaults are scaled to the scalar type's precision.
#[derive(Debug, Clone)]
pub struct SolverOptions<S> {
    /// Feasibility tolerance, applied to values normalized by `max(1, ‖b‖∞)`.
    pub tol_feas: S,
    /// Reduced-cost / duality tolerance.
    pub tol_dual: S,
    /// Dual threshold for membership in the active set.
    pub tol_active: S,
    /// Smallest acceptable pivot magnitude.
    pub tol_pivot: S,
    /// Hard iteration cap; exceeding it is a numerical failure.
    pub max_iterations: usize,
    /// Switch to Bland's rule after this many iterations.
    pub bland_after: usize,
    /// Refactorize the basis after this many pivots.
    pub refactor_every: usize,
}

impl<S: Real> Default for SolverOptions<S> {
    fn default() -> Self {
        let eps = S::epsilon();
        SolverOptions {
            tol_feas: real::<S>(1e-7).max(eps * real(100.0)),
            tol_dual: real::<S>(1e-7).max(eps * real(100.0)),
            tol_active: real::<S>(1e-9).max(eps * real(10.0)),
            tol_pivot: eps.powf(real(0.66)),
            max_iterations: 50_000,
            bland_after: 2_000,
            refactor_every: 64,
        }
    }
}

impl<S: Real> SolverOptions<S> {
    /// Override both feasibility and duality tolerances.
    pub fn with_tolerance(mut self, tol: S) -> Self {
        self.tol_feas = tol;
        self.tol_dual = tol;
        self
    }
}

/// Solve with default options.
pub fn solve<S: Real>(lp: &StandardFormLp<S>) -> Result<LpSolution<S>, LpError> {
    solve_with(lp, &SolverOptions::default())
}

/// Solve with explicit options.
pub fn solve_with<S: Real>(
    lp: &StandardFormLp<S>,
    opts: &SolverOptions<S>,
) -> Result<LpSolution<S>, LpError> {
    simplex::Simplex::new(lp, opts).run()
}

/// Active rows at the optimum plus the rows that are tight but carry a zero
/// multiplier (degenerate; including them could make the active system
/// overdetermined, so they are reported separately).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveSet {
    pub active: Vec<usize>,
    pub tight_zero_dual: Vec<usize>,
}

/// Rows with `λ_i > tol`, unioned with all equality rows; equalities are
/// always active. `sol` must be optimal.
pub fn active_set<S: Real>(lp: &StandardFormLp<S>, sol: &LpSolution<S>, tol: S) -> ActiveSet {
    assert!(sol.is_optimal(), "active set requires an optimal solution");
    let res = lp.residuals(&sol.x);
    let scale = lp
        .rhs
        .iter()
        .fold(S::one(), |acc, &b| acc.max(b.abs()));
    let tight_tol = SolverOptions::<S>::default().tol_feas * scale;
    let mut active = Vec::new();
    let mut tight_zero_dual = Vec::new();
    for i in 0..lp.n_rows() {
        match lp.kinds[i] {
            RowKind::Eq => active.push(i),
            RowKind::Le => {
                if sol.duals[i] > tol {
                    active.push(i);
                } else if res[i].abs() <= tight_tol {
                    tight_zero_dual.push(i);
                }
            }
        }
    }
    ActiveSet {
        active,
        tight_zero_dual,
    }
}

#[cfg(test)]
mod tests;
