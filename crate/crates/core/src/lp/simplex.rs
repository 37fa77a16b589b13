//! Two-phase revised simplex over `≤`/`=` rows with free structural columns.
//!
//! Internal form: every row `i` gets a slack, `a_i·x + s_i = b_i`, with
//! `s_i ∈ [0, ∞)` for `≤` rows and `s_i ≡ 0` for equalities. Structural
//! columns are free. Feasibility-phase artificials are added per row where
//! the all-slack start violates a bound. Since every bounded variable rests
//! at zero, nonbasic values are identically zero and `x_B = B⁻¹ b` holds at
//! every refactorization.
//!
//! The basis is a sparse LU factorization plus product-form eta updates,
//! refactorized periodically. Pricing is Dantzig's rule with a deterministic
//! lowest-index tie-break, switching to Bland's rule after a fixed iteration
//! count to guarantee termination on degenerate problems.

use crate::error::LpError;
use crate::lu::SparseLu;
use crate::scalar::{real, Real};
use crate::stats;

use super::{BasisEntry, LpSolution, RowKind, SolveStatus, SolverOptions, StandardFormLp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Feasibility,
    Optimality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarKind {
    Free,
    LowerZero,
    Fixed,
}

struct Eta<S> {
    pos: usize,
    pivot: S,
    /// entries of the FTRAN'd entering column, excluding the pivot position
    col: Vec<(usize, S)>,
}

pub(super) struct Simplex<'a, S: Real> {
    lp: &'a StandardFormLp<S>,
    opts: &'a SolverOptions<S>,
    m: usize,
    n: usize,
    scale_b: S,
    /// artificial k sits on row `art_rows[k]` with coefficient `art_signs[k]`
    art_rows: Vec<usize>,
    art_signs: Vec<S>,
    basis: Vec<usize>,
    pos_of_var: Vec<usize>,
    x_basic: Vec<S>,
    lu: Option<SparseLu<S>>,
    etas: Vec<Eta<S>>,
    banned: Vec<usize>,
    iterations: usize,
    phase: Phase,
}

const NONBASIC: usize = usize::MAX;

impl<'a, S: Real> Simplex<'a, S> {
    pub(super) fn new(lp: &'a StandardFormLp<S>, opts: &'a SolverOptions<S>) -> Self {
        let m = lp.n_rows();
        let n = lp.n_cols();
        let scale_b = lp.rhs.iter().fold(S::one(), |acc, &b| acc.max(b.abs()));
        Simplex {
            lp,
            opts,
            m,
            n,
            scale_b,
            art_rows: Vec::new(),
            art_signs: Vec::new(),
            basis: Vec::with_capacity(m),
            pos_of_var: Vec::new(),
            x_basic: Vec::with_capacity(m),
            lu: None,
            etas: Vec::new(),
            banned: Vec::new(),
            iterations: 0,
            phase: Phase::Feasibility,
        }
    }

    // -- variable space -----------------------------------------------------
    // 0..n structural | n..n+m slacks | n+m.. artificials

    fn n_vars(&self) -> usize {
        self.n + self.m + self.art_rows.len()
    }

    fn var_kind(&self, v: usize) -> VarKind {
        if v < self.n {
            VarKind::Free
        } else if v < self.n + self.m {
            match self.lp.kinds[v - self.n] {
                RowKind::Le => VarKind::LowerZero,
                RowKind::Eq => VarKind::Fixed,
            }
        } else {
            match self.phase {
                Phase::Feasibility => VarKind::LowerZero,
                Phase::Optimality => VarKind::Fixed,
            }
        }
    }

    fn var_cost(&self, v: usize) -> S {
        match self.phase {
            Phase::Feasibility => {
                if v >= self.n + self.m {
                    S::one()
                } else {
                    S::zero()
                }
            }
            Phase::Optimality => {
                if v < self.n {
                    self.lp.cost[v]
                } else {
                    S::zero()
                }
            }
        }
    }

    fn var_col(&self, v: usize, out: &mut Vec<(usize, S)>) {
        out.clear();
        if v < self.n {
            out.extend(self.lp.matrix.col(v));
        } else if v < self.n + self.m {
            out.push((v - self.n, S::one()));
        } else {
            let k = v - self.n - self.m;
            out.push((self.art_rows[k], self.art_signs[k]));
        }
    }

    fn col_dot(&self, v: usize, y: &[S]) -> S {
        if v < self.n {
            self.lp.matrix.col_dot(v, y)
        } else if v < self.n + self.m {
            y[v - self.n]
        } else {
            let k = v - self.n - self.m;
            self.art_signs[k] * y[self.art_rows[k]]
        }
    }

    // -- factorization ------------------------------------------------------

    fn refactorize(&mut self) -> Result<(), LpError> {
        let mut cols: Vec<Vec<(usize, S)>> = Vec::with_capacity(self.m);
        let mut scratch = Vec::new();
        for &v in &self.basis {
            self.var_col(v, &mut scratch);
            cols.push(scratch.clone());
        }
        let lu = SparseLu::factorize(self.m, |k, out| out.extend_from_slice(&cols[k]))
            .map_err(|col| LpError::SingularBasis { col })?;
        self.lu = Some(lu);
        self.etas.clear();
        // Nonbasic variables all sit at zero, so x_B = B⁻¹ b exactly.
        self.x_basic = self.lu.as_ref().unwrap().solve(&self.lp.rhs);
        Ok(())
    }

    fn ftran(&self, col: &[(usize, S)]) -> Vec<S> {
        let mut dense = vec![S::zero(); self.m];
        for &(r, v) in col {
            dense[r] = dense[r] + v;
        }
        let mut x = self.lu.as_ref().unwrap().solve(&dense);
        for eta in &self.etas {
            let xp = x[eta.pos] / eta.pivot;
            if xp != S::zero() {
                for &(i, v) in &eta.col {
                    x[i] = x[i] - v * xp;
                }
            }
            x[eta.pos] = xp;
        }
        x
    }

    fn btran(&self, c_basic: &[S]) -> Vec<S> {
        let mut u = c_basic.to_vec();
        for eta in self.etas.iter().rev() {
            let mut acc = u[eta.pos];
            for &(i, v) in &eta.col {
                acc = acc - v * u[i];
            }
            u[eta.pos] = acc / eta.pivot;
        }
        self.lu.as_ref().unwrap().solve_transpose(&u)
    }

    fn push_eta(&mut self, pos: usize, w: &[S]) {
        let col: Vec<(usize, S)> = w
            .iter()
            .enumerate()
            .filter(|&(i, &v)| i != pos && v != S::zero())
            .map(|(i, &v)| (i, v))
            .collect();
        self.etas.push(Eta {
            pos,
            pivot: w[pos],
            col,
        });
    }

    // -- main loop ----------------------------------------------------------

    pub(super) fn run(mut self) -> Result<LpSolution<S>, LpError> {
        stats::record_lp_solve();
        self.install_initial_basis();
        self.refactorize()?;

        self.phase = Phase::Feasibility;
        if !self.art_rows.is_empty() {
            if self.optimize()?.is_some() {
                // The feasibility objective is bounded below by zero; a
                // descent ray here means the numerics have gone astray.
                return Err(LpError::NumericalFailure {
                    iterations: self.iterations,
                });
            }
            let infeas: S = self
                .basis
                .iter()
                .zip(&self.x_basic)
                .filter(|&(&v, _)| v >= self.n + self.m)
                .map(|(_, &x)| x.abs())
                .sum();
            if infeas > self.opts.tol_feas * self.scale_b {
                let y = self.dual_values();
                return Ok(self.finish(SolveStatus::Infeasible { farkas: y }));
            }
        }

        self.phase = Phase::Optimality;
        self.banned.clear();
        if let Some(ray) = self.optimize()? {
            return Ok(self.finish(SolveStatus::Unbounded { ray }));
        }
        self.drive_out_fixed()?;
        self.refactorize()?;
        Ok(self.finish(SolveStatus::Optimal))
    }

    fn install_initial_basis(&mut self) {
        self.basis.clear();
        for i in 0..self.m {
            let b = self.lp.rhs[i];
            let needs_artificial = match self.lp.kinds[i] {
                RowKind::Le => b < S::zero(),
                RowKind::Eq => b != S::zero(),
            };
            if needs_artificial {
                let sign = if b >= S::zero() { S::one() } else { -S::one() };
                let v = self.n + self.m + self.art_rows.len();
                self.art_rows.push(i);
                self.art_signs.push(sign);
                self.basis.push(v);
            } else {
                self.basis.push(self.n + i);
            }
        }
        self.pos_of_var = vec![NONBASIC; self.n_vars()];
        for (p, &v) in self.basis.iter().enumerate() {
            self.pos_of_var[v] = p;
        }
    }

    /// Pivot until optimal for the current phase. Returns a descent ray
    /// (structural space) if the phase objective is unbounded.
    fn optimize(&mut self) -> Result<Option<Vec<S>>, LpError> {
        let mut scratch = Vec::new();
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Err(LpError::NumericalFailure {
                    iterations: self.iterations,
                });
            }
            let bland = self.iterations >= self.opts.bland_after;

            let c_basic: Vec<S> = self.basis.iter().map(|&v| self.var_cost(v)).collect();
            let y = self.btran(&c_basic);

            let Some((v_in, dir)) = self.price(&y, bland) else {
                if !self.banned.is_empty() {
                    return Err(LpError::NumericalFailure {
                        iterations: self.iterations,
                    });
                }
                return Ok(None);
            };

            self.var_col(v_in, &mut scratch);
            let mut w = self.ftran(&scratch);

            let mut leaving = self.ratio_test(&w, dir, bland);
            if leaving.is_none() && !self.etas.is_empty() {
                // Confirm unboundedness against a fresh factorization.
                self.refactorize()?;
                w = self.ftran(&scratch);
                leaving = self.ratio_test(&w, dir, bland);
            }

            match leaving {
                Some(p_out) => {
                    let pivot = w[p_out];
                    if pivot.abs() < self.opts.tol_pivot {
                        if self.etas.is_empty() {
                            // Fresh factorization and still unusable: skip
                            // this column for the remainder of the phase.
                            self.banned.push(v_in);
                        } else {
                            self.refactorize()?;
                        }
                        self.iterations += 1;
                        continue;
                    }
                    let t = self.x_basic[p_out] / (dir * pivot);
                    let step = t.max(S::zero());
                    for (p, xb) in self.x_basic.iter_mut().enumerate() {
                        *xb = *xb - step * dir * w[p];
                    }
                    let v_out = self.basis[p_out];
                    self.pos_of_var[v_out] = NONBASIC;
                    self.basis[p_out] = v_in;
                    self.pos_of_var[v_in] = p_out;
                    self.x_basic[p_out] = step * dir;
                    self.push_eta(p_out, &w);
                    self.banned.clear();
                    self.iterations += 1;
                    if self.etas.len() >= self.opts.refactor_every {
                        self.refactorize()?;
                    }
                }
                None => {
                    let mut ray = vec![S::zero(); self.n];
                    if v_in < self.n {
                        ray[v_in] = dir;
                    }
                    for (p, &v) in self.basis.iter().enumerate() {
                        if v < self.n {
                            ray[v] = -dir * w[p];
                        }
                    }
                    return Ok(Some(ray));
                }
            }
        }
    }

    /// Entering-variable selection. Returns `(var, direction)`.
    fn price(&self, y: &[S], bland: bool) -> Option<(usize, S)> {
        let tol = self.opts.tol_dual;
        let mut best: Option<(usize, S, S)> = None; // (var, dir, |d|)
        for v in 0..self.n_vars() {
            if self.pos_of_var[v] != NONBASIC {
                continue;
            }
            // Artificials never come back once evicted.
            if v >= self.n + self.m {
                continue;
            }
            let kind = self.var_kind(v);
            if kind == VarKind::Fixed || self.banned.contains(&v) {
                continue;
            }
            let d = self.var_cost(v) - self.col_dot(v, y);
            let eligible = match kind {
                VarKind::Free => d.abs() > tol,
                VarKind::LowerZero => d < -tol,
                VarKind::Fixed => false,
            };
            if !eligible {
                continue;
            }
            let dir = if d < S::zero() { S::one() } else { -S::one() };
            if bland {
                return Some((v, dir));
            }
            match best {
                Some((_, _, mag)) if mag >= d.abs() => {}
                _ => best = Some((v, dir, d.abs())),
            }
        }
        best.map(|(v, dir, _)| (v, dir))
    }

    /// Ratio test. Basic variables bounded below block when pushed toward
    /// zero; fixed basics (equality slacks, retired artificials) block any
    /// movement. Returns the leaving position, or `None` if unbounded.
    fn ratio_test(&self, w: &[S], dir: S, bland: bool) -> Option<usize> {
        let tol_piv = self.opts.tol_pivot;
        let mut best: Option<(usize, S)> = None; // (position, limit)
        for p in 0..self.m {
            let v = self.basis[p];
            let kind = self.var_kind(v);
            if kind == VarKind::Free {
                continue;
            }
            let delta = dir * w[p];
            let limit = if delta > tol_piv {
                (self.x_basic[p] / delta).max(S::zero())
            } else if kind == VarKind::Fixed && delta < -tol_piv {
                S::zero()
            } else {
                continue;
            };
            let better = match best {
                None => true,
                Some((bp, bl)) => {
                    if (limit - bl).abs() <= tol_piv * self.scale_b {
                        if bland {
                            v < self.basis[bp]
                        } else {
                            // Prefer evicting artificials and fixed slacks,
                            // then the larger pivot for stability.
                            let cand_fixed =
                                kind == VarKind::Fixed || v >= self.n + self.m;
                            let best_v = self.basis[bp];
                            let best_fixed = self.var_kind(best_v) == VarKind::Fixed
                                || best_v >= self.n + self.m;
                            match (cand_fixed, best_fixed) {
                                (true, false) => true,
                                (false, true) => false,
                                _ => w[p].abs() > w[bp].abs(),
                            }
                        }
                    } else {
                        limit < bl
                    }
                }
            };
            if better {
                best = Some((p, limit));
            }
        }
        best.map(|(p, _)| p)
    }

    /// Replace basic fixed variables (equality slacks and leftover
    /// artificials, all pinned at zero) by nonbasic structural columns with
    /// zero reduced cost. Entering at zero reduced cost leaves the duals
    /// untouched, makes "equalities are always active" structurally true in
    /// the exported basis, and lets the sensitivity solve route a
    /// right-hand-side change through model columns instead of absorbing it
    /// in an inert slack. Candidates are preferred by expandability (no
    /// tight `≤` row immediately blocks an increase), then cost, then index.
    fn drive_out_fixed(&mut self) -> Result<(), LpError> {
        let c_basic: Vec<S> = self.basis.iter().map(|&v| self.var_cost(v)).collect();
        let y = self.btran(&c_basic);
        let headrooms = self.column_headrooms();
        let mut scratch = Vec::new();

        for p in 0..self.m {
            let v_out = self.basis[p];
            let is_fixed = self.var_kind(v_out) == VarKind::Fixed || v_out >= self.n + self.m;
            if !is_fixed || self.x_basic[p].abs() > self.opts.tol_feas * self.scale_b {
                continue;
            }
            let mut e = vec![S::zero(); self.m];
            e[p] = S::one();
            let rho = self.btran(&e);

            let mut chosen: Option<(bool, S, usize)> = None; // (expandable, cost, var)
            for v in 0..self.n {
                if self.pos_of_var[v] != NONBASIC {
                    continue;
                }
                let d = self.var_cost(v) - self.col_dot(v, &y);
                if d.abs() > self.opts.tol_dual * real::<S>(10.0) {
                    continue;
                }
                let pivot = self.col_dot(v, &rho);
                if pivot.abs() <= self.opts.tol_pivot * real::<S>(100.0) {
                    continue;
                }
                let cand = (headrooms[v], self.lp.cost[v], v);
                let better = match chosen {
                    None => true,
                    Some((exp, cost, vi)) => {
                        (cand.0 && !exp) || (cand.0 == exp && (cand.1, cand.2) < (cost, vi))
                    }
                };
                if better {
                    chosen = Some(cand);
                }
            }
            if let Some((_, _, v_in)) = chosen {
                self.var_col(v_in, &mut scratch);
                let w = self.ftran(&scratch);
                if w[p].abs() <= self.opts.tol_pivot {
                    continue;
                }
                self.pos_of_var[v_out] = NONBASIC;
                self.basis[p] = v_in;
                self.pos_of_var[v_in] = p;
                self.x_basic[p] = S::zero();
                self.push_eta(p, &w);
                if self.etas.len() >= self.opts.refactor_every {
                    self.refactorize()?;
                }
            }
        }
        Ok(())
    }

    /// For every structural column: can it increase without an immediately
    /// blocking tight `≤` row? Used only as a preference order.
    fn column_headrooms(&self) -> Vec<bool> {
        let mut x = vec![S::zero(); self.n];
        for (p, &v) in self.basis.iter().enumerate() {
            if v < self.n {
                x[v] = self.x_basic[p];
            }
        }
        let res = self.lp.residuals(&x);
        let tol = self.opts.tol_feas * self.scale_b;
        let mut expandable = vec![true; self.n];
        for (j, flag) in expandable.iter_mut().enumerate() {
            for (r, a) in self.lp.matrix.col(j) {
                if self.lp.kinds[r] == RowKind::Le && a > S::zero() && res[r].abs() <= tol {
                    *flag = false;
                    break;
                }
            }
        }
        expandable
    }

    fn dual_values(&self) -> Vec<S> {
        let c_basic: Vec<S> = self.basis.iter().map(|&v| self.var_cost(v)).collect();
        self.btran(&c_basic)
    }

    fn finish(mut self, status: SolveStatus<S>) -> LpSolution<S> {
        let optimal = matches!(status, SolveStatus::Optimal);
        let (x, duals, objective) = if optimal {
            let mut x = vec![S::zero(); self.n];
            for (p, &v) in self.basis.iter().enumerate() {
                if v < self.n {
                    x[v] = self.x_basic[p];
                }
            }
            self.phase = Phase::Optimality;
            let y = self.dual_values();
            let duals: Vec<S> = y.iter().map(|&yi| -yi).collect();
            let objective = self.lp.objective_of(&x);
            (x, duals, objective)
        } else {
            (Vec::new(), Vec::new(), S::zero())
        };
        let basis = self
            .basis
            .iter()
            .map(|&v| {
                if v < self.n {
                    BasisEntry::Column(v)
                } else if v < self.n + self.m {
                    BasisEntry::Slack(v - self.n)
                } else {
                    let k = v - self.n - self.m;
                    BasisEntry::Artificial {
                        row: self.art_rows[k],
                        negated: self.art_signs[k] < S::zero(),
                    }
                }
            })
            .collect();
        LpSolution {
            status,
            x,
            duals,
            objective,
            basis,
            iterations: self.iterations,
        }
    }
}
