use super::*;
use crate::error::LpError;

fn tag(i: u32) -> RowTag {
    RowTag::Other(i)
}

fn ctag(i: u32) -> ColTag {
    ColTag::Other(i)
}

/// min x s.t. -x <= 0, x <= 5
fn bound_active_lp() -> StandardFormLp<f64> {
    let mut b = LpBuilder::new();
    let x = b.col(1.0, ctag(0));
    b.row(RowKind::Le, 0.0, tag(0), &[(x, -1.0)]);
    b.row(RowKind::Le, 5.0, tag(1), &[(x, 1.0)]);
    b.build()
}

/// min -x-y s.t. x<=1, y<=1, x+y<=1.5
fn two_var_lp() -> StandardFormLp<f64> {
    let mut b = LpBuilder::new();
    let x = b.col(-1.0, ctag(0));
    let y = b.col(-1.0, ctag(1));
    b.row(RowKind::Le, 1.0, tag(0), &[(x, 1.0)]);
    b.row(RowKind::Le, 1.0, tag(1), &[(y, 1.0)]);
    b.row(RowKind::Le, 1.5, tag(2), &[(x, 1.0), (y, 1.0)]);
    b.build()
}

#[test]
fn bound_active_solves_to_zero() {
    let lp = bound_active_lp();
    let sol = solve(&lp).unwrap();
    assert!(sol.is_optimal());
    assert!(sol.x[0].abs() <= 1e-9);
    assert!(sol.objective.abs() <= 1e-9);
    // Only the lower bound row is active.
    let act = active_set(&lp, &sol, 1e-9);
    assert_eq!(act.active, vec![0]);
}

#[test]
fn two_var_polytope_objective() {
    // Vertices of the feasible polytope along the optimal face, by hand:
    // (1, 0.5) and (0.5, 1), both with objective -1.5.
    let lp = two_var_lp();
    let sol = solve(&lp).unwrap();
    assert!(sol.is_optimal());
    assert!((sol.objective + 1.5).abs() <= 1e-9, "obj {}", sol.objective);
    assert!(lp.feasibility_error(&sol.x) <= 1e-9);
}

#[test]
fn infeasible_pair_detected() {
    // x <= -1 and -x <= -1 (x >= 1) cannot both hold.
    let mut b = LpBuilder::<f64>::new();
    let x = b.col(1.0, ctag(0));
    b.row(RowKind::Le, -1.0, tag(0), &[(x, 1.0)]);
    b.row(RowKind::Le, -1.0, tag(1), &[(x, -1.0)]);
    let lp = b.build();
    let sol = solve(&lp).unwrap();
    assert!(matches!(sol.status, SolveStatus::Infeasible { .. }));
}

#[test]
fn unbounded_detected_with_ray() {
    let mut b = LpBuilder::<f64>::new();
    let x = b.col(-1.0, ctag(0));
    b.row(RowKind::Le, 0.0, tag(0), &[(x, -1.0)]);
    let lp = b.build();
    let sol = solve(&lp).unwrap();
    match sol.status {
        SolveStatus::Unbounded { ray } => assert!(ray[0] > 0.0),
        s => panic!("expected unbounded, got {s:?}"),
    }
}

#[test]
fn equality_row_always_active() {
    // min x + y s.t. x + y = 1, x <= 5 — the equality has dual 1 here, but
    // membership must not depend on it.
    let mut b = LpBuilder::<f64>::new();
    let x = b.col(1.0, ctag(0));
    let y = b.col(1.0, ctag(1));
    b.row(RowKind::Eq, 1.0, tag(0), &[(x, 1.0), (y, 1.0)]);
    b.row(RowKind::Le, 5.0, tag(1), &[(x, 1.0)]);
    let lp = b.build();
    let sol = solve(&lp).unwrap();
    assert!(sol.is_optimal());
    let act = active_set(&lp, &sol, 1e-9);
    assert!(act.active.contains(&0));
    assert!((sol.objective - 1.0).abs() <= 1e-9);
}

#[test]
fn degenerate_vertex_reports_tight_zero_dual_rows() {
    // Three rows tight at (1,1) in 2-D: x<=1, y<=1, x+y<=2. Exactly two can
    // carry positive duals in a basic solution; the rest is tight with a
    // zero dual and reported separately.
    let mut b = LpBuilder::<f64>::new();
    let x = b.col(-1.0, ctag(0));
    let y = b.col(-1.0, ctag(1));
    b.row(RowKind::Le, 1.0, tag(0), &[(x, 1.0)]);
    b.row(RowKind::Le, 1.0, tag(1), &[(y, 1.0)]);
    b.row(RowKind::Le, 2.0, tag(2), &[(x, 1.0), (y, 1.0)]);
    let lp = b.build();
    let sol = solve(&lp).unwrap();
    assert!(sol.is_optimal());
    assert!((sol.objective + 2.0).abs() <= 1e-9);
    let act = active_set(&lp, &sol, 1e-9);
    assert_eq!(act.active.len() + act.tight_zero_dual.len(), 3);
    // Complementary slackness on the active rows.
    let res = lp.residuals(&sol.x);
    for &i in &act.active {
        assert!(res[i].abs() <= 1e-9);
    }
}

#[test]
fn duals_satisfy_kkt_and_strong_duality() {
    for lp in [bound_active_lp(), two_var_lp()] {
        let sol = solve(&lp).unwrap();
        assert!(sol.is_optimal());
        // stationarity: c + Aᵀλ = 0
        let atl = lp.matrix.tmul_vec(&sol.duals);
        for (j, (&c, a)) in lp.cost.iter().zip(atl).enumerate() {
            assert!((c + a).abs() <= 1e-8, "stationarity violated at col {j}");
        }
        // λ ≥ 0 on ≤ rows
        for (i, &l) in sol.duals.iter().enumerate() {
            if lp.kinds[i] == RowKind::Le {
                assert!(l >= -1e-9, "negative dual {l} on row {i}");
            }
        }
        // strong duality: cᵀx + bᵀλ = 0
        let btl: f64 = lp.rhs.iter().zip(&sol.duals).map(|(&b, &l)| b * l).sum();
        assert!((sol.objective + btl).abs() <= 1e-8);
        // complementary slackness
        let cs: f64 = lp
            .residuals(&sol.x)
            .iter()
            .zip(&sol.duals)
            .map(|(&r, &l)| (r * l).abs())
            .sum();
        assert!(cs <= 1e-7);
    }
}

#[test]
fn basis_solve_zero_rhs_is_zero() {
    let lp = two_var_lp();
    let sol = solve(&lp).unwrap();
    let dx = basis_solve(&lp, &sol, &[]).unwrap();
    assert!(dx.iter().all(|&v| v == 0.0));
}

#[test]
fn basis_solve_identity_on_lower_bound() {
    // min x s.t. x >= d, written as -x <= -d, with d = 2. Raising d by one
    // raises x by one: Δb = -1 on the row gives Δx = +1.
    let mut b = LpBuilder::<f64>::new();
    let x = b.col(1.0, ctag(0));
    b.row(RowKind::Le, -2.0, tag(0), &[(x, -1.0)]);
    let lp = b.build();
    let sol = solve(&lp).unwrap();
    assert!((sol.x[0] - 2.0).abs() <= 1e-9);
    let dx = basis_solve(&lp, &sol, &[(0, -1.0)]).unwrap();
    assert!((dx[0] - 1.0).abs() <= 1e-9);
}

#[test]
fn basis_solve_matches_exact_reoptimization() {
    // Perturbing x+y <= 1.5 to 1.6 must change the objective by -0.1
    // (re-solving the perturbed LP exactly gives -1.6).
    let lp = two_var_lp();
    let sol = solve(&lp).unwrap();
    let sys = BasisSystem::new(&lp, &sol).unwrap();
    let dx = sys.solve(&[(2, 0.1)]);
    let dobj: f64 = lp.cost.iter().zip(&dx).map(|(&c, &d)| c * d).sum();
    assert!((dobj + 0.1).abs() <= 1e-9, "Δobj {dobj}");

    let mut lp2 = lp.clone();
    lp2.rhs[2] = 1.6;
    let sol2 = solve(&lp2).unwrap();
    assert!((sol2.objective - (sol.objective + dobj)).abs() <= 1e-9);
    // Perturbed point stays primal feasible and the active set is unchanged.
    let x_new: Vec<f64> = sol.x.iter().zip(&dx).map(|(&a, &b)| a + b).collect();
    assert!(lp2.feasibility_error(&x_new) <= 1e-9);
    assert_eq!(
        active_set(&lp, &sol, 1e-9).active,
        active_set(&lp2, &sol2, 1e-9).active
    );
}

#[test]
fn deterministic_resolve_is_bit_identical() {
    let lp = two_var_lp();
    let a = solve(&lp).unwrap();
    let b = solve(&lp).unwrap();
    assert_eq!(a.x, b.x);
    assert_eq!(a.basis, b.basis);
    assert_eq!(a.duals, b.duals);
}

#[test]
fn f32_smoke() {
    let mut b = LpBuilder::<f32>::new();
    let x = b.col(-1.0, ctag(0));
    let y = b.col(-1.0, ctag(1));
    b.row(RowKind::Le, 1.0, tag(0), &[(x, 1.0)]);
    b.row(RowKind::Le, 1.0, tag(1), &[(y, 1.0)]);
    b.row(RowKind::Le, 1.5, tag(2), &[(x, 1.0), (y, 1.0)]);
    let lp = b.build();
    let sol = solve(&lp).unwrap();
    assert!(sol.is_optimal());
    assert!((sol.objective + 1.5).abs() <= 1e-4);
}

#[test]
fn singular_basis_is_reported() {
    // Force a deliberately broken basis: both entries point at the same
    // slack column, which cannot be factorized.
    let lp = bound_active_lp();
    let mut sol = solve(&lp).unwrap();
    sol.basis = vec![BasisEntry::Slack(1), BasisEntry::Slack(1)];
    match BasisSystem::new(&lp, &sol) {
        Err(LpError::SingularBasis { .. }) => {}
        other => panic!("expected singular basis, got {other:?}"),
    }
}

/// Small randomized cross-check against brute-force vertex enumeration.
/// (The acceptance suite runs the full-size version of this check.)
#[test]
fn random_lps_match_vertex_enumeration() {
    let mut seed = 7u64;
    let mut rng = move || {
        seed = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((seed >> 33) as f64 / (1u64 << 31) as f64) - 1.0
    };
    for case in 0..40 {
        let n = 2 + case % 3;
        let m_extra = 2 + case % 4;
        let mut b = LpBuilder::<f64>::new();
        let cols: Vec<usize> = (0..n).map(|j| b.col(rng(), ctag(j as u32))).collect();
        // Random rows through a known feasible point x0.
        let x0: Vec<f64> = (0..n).map(|_| rng()).collect();
        for i in 0..m_extra {
            let coefs: Vec<f64> = (0..n).map(|_| rng()).collect();
            let ax0: f64 = coefs.iter().zip(&x0).map(|(a, x)| a * x).sum();
            let rhs = ax0 + rng().abs();
            let entries: Vec<(usize, f64)> =
                cols.iter().zip(&coefs).map(|(&c, &a)| (c, a)).collect();
            b.row(RowKind::Le, rhs, tag(i as u32), &entries);
        }
        // Box rows keep the polytope bounded.
        for (j, &c) in cols.iter().enumerate() {
            b.row(RowKind::Le, 3.0, tag(100 + j as u32), &[(c, 1.0)]);
            b.row(RowKind::Le, 3.0, tag(200 + j as u32), &[(c, -1.0)]);
        }
        let lp = b.build();
        let sol = solve(&lp).unwrap();
        assert!(sol.is_optimal(), "case {case} should be feasible+bounded");
        let best = vertex_enumeration_min(&lp);
        assert!(
            (sol.objective - best).abs() <= 1e-7 * (1.0 + best.abs()),
            "case {case}: simplex {} vs oracle {best}",
            sol.objective
        );
    }
}

/// Brute-force oracle: enumerate all row subsets of size n, solve the square
/// systems, keep the best feasible vertex. Independent of the solver.
fn vertex_enumeration_min(lp: &StandardFormLp<f64>) -> f64 {
    let n = lp.n_cols();
    let m = lp.n_rows();
    let rows: Vec<Vec<f64>> = {
        let mut r = vec![vec![0.0; n]; m];
        for j in 0..n {
            for (i, v) in lp.matrix.col(j) {
                r[i][j] = v;
            }
        }
        r
    };
    let mut best = f64::INFINITY;
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        // Solve rows[subset] x = b[subset] by dense elimination.
        let mut a: Vec<Vec<f64>> = subset.iter().map(|&i| rows[i].clone()).collect();
        let mut rhs: Vec<f64> = subset.iter().map(|&i| lp.rhs[i]).collect();
        let mut ok = true;
        for k in 0..n {
            let piv = (k..n).max_by(|&i, &j| {
                a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap()
            });
            let piv = piv.unwrap();
            if a[piv][k].abs() < 1e-10 {
                ok = false;
                break;
            }
            a.swap(k, piv);
            rhs.swap(k, piv);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                rhs[i] -= f * rhs[k];
            }
        }
        if ok {
            for k in (0..n).rev() {
                for j in k + 1..n {
                    rhs[k] -= a[k][j] * rhs[j];
                }
                rhs[k] /= a[k][k];
            }
            if lp.feasibility_error(&rhs) <= 1e-8 {
                let obj = lp.objective_of(&rhs);
                if obj < best {
                    best = obj;
                }
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if subset[i] != i + m - n {
                subset[i] += 1;
                for j in i + 1..n {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}
