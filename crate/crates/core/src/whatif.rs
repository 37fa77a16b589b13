//! Marginal ("what-if") CO₂ intensities: `∂M_tot/∂D(co,t)`.
//!
//! The primary path factorizes the optimal dispatch basis once and solves
//! one right-hand side per demanded `(commodity, step)`: a unit entry on
//! that demand's fix row. The total-CO₂ component of the response is the
//! marginal intensity (kt per GWh ≡ t/MWh). A full sweep therefore costs
//! one LP solve (the dispatch) and one factorization, no matter how many
//! entries are queried.
//!
//! The independent oracle is finite-difference re-dispatch: perturb one
//! demand entry, re-solve, difference the totals. Where forward and
//! backward differences disagree the optimum sits on a kink (degenerate
//! active set) and the basis derivative is one-sided at best; such entries
//! are flagged and the forward (demand-increase) value is reported.

use std::collections::BTreeMap;

use crate::dispatch::{solve_dispatch, DispatchResult};
use crate::error::{DispatchError, WhatIfError};
use crate::lp::{BasisSystem, RowTag};
use crate::model::EnergySystem;
use crate::scalar::{real, to_f64, Real};

/// How an entry's value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    BasisSolve,
    FiniteDifference,
}

/// One-sided finite-difference estimates at an entry flagged degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneSided<S> {
    /// Demand-increase derivative, t/MWh.
    pub forward: S,
    /// Demand-decrease derivative; `None` when the backward perturbation is
    /// infeasible (demand at zero).
    pub backward: Option<S>,
}

/// Marginal intensities per demanded `(commodity, step)`.
#[derive(Debug, Clone)]
pub struct WhatIfResult<S> {
    /// Demanded commodity indices, declaration order.
    pub commodities: Vec<usize>,
    /// t/MWh per `(commodity, step)`.
    pub value: BTreeMap<(usize, usize), S>,
    pub method: BTreeMap<(usize, usize), Method>,
    /// Entries where the two one-sided derivatives (or the basis solve and
    /// the oracle) disagree beyond tolerance.
    pub degenerate: BTreeMap<(usize, usize), OneSided<S>>,
    /// Forward finite-difference values, present on the checked path.
    pub fd_value: BTreeMap<(usize, usize), S>,
    /// Perturbation step used by finite differences, GWh.
    pub fd_step_gwh: S,
}

impl<S: Real> WhatIfResult<S> {
    pub fn value_at(&self, commodity: usize, step: usize) -> S {
        self.value[&(commodity, step)]
    }

    pub fn is_degenerate(&self, commodity: usize, step: usize) -> bool {
        self.degenerate.contains_key(&(commodity, step))
    }
}

/// Options for the finite-difference comparison pass.
#[derive(Debug, Clone)]
pub struct FdCheckOptions<S> {
    /// Check only every k-th entry so that roughly `sample` entries are hit.
    pub sample: Option<usize>,
    /// Override the perturbation step, GWh.
    pub eps_gwh: Option<S>,
}

impl<S> Default for FdCheckOptions<S> {
    fn default() -> Self {
        FdCheckOptions {
            sample: None,
            eps_gwh: None,
        }
    }
}

/// Basis-solve disagreement tolerance against the oracle.
pub fn agreement_tol<S: Real>(value: S) -> S {
    real::<S>(1e-6).max(real::<S>(1e-4) * value.abs())
}

/// Tolerance above which forward/backward derivatives count as a kink.
pub const DEGENERACY_TOL: f64 = 1e-6;

/// Default perturbation step: `1e-4` of the peak demand (with a floor for
/// systems whose demands are all zero).
pub fn default_fd_step<S: Real>(system: &EnergySystem<S>) -> S {
    let peak = system
        .demands
        .values()
        .flat_map(|series| series.iter().copied())
        .fold(S::zero(), S::max);
    real::<S>(1e-4) * peak.max(S::one())
}

/// Marginal intensities for every demanded `(commodity, step)` via the
/// shared basis factorization. Falls back to finite differences for all
/// entries only if the optimal basis is singular; never aborts the sweep.
pub fn compute_whatif<S: Real>(
    system: &EnergySystem<S>,
    dispatch: &DispatchResult<S>,
) -> Result<WhatIfResult<S>, WhatIfError> {
    compute_whatif_inner(system, dispatch, None)
}

/// As [`compute_whatif`], additionally running the finite-difference oracle
/// on (a sample of) the entries and flagging disagreements as degenerate.
/// Costs one re-dispatch per checked entry.
pub fn compute_whatif_checked<S: Real>(
    system: &EnergySystem<S>,
    dispatch: &DispatchResult<S>,
    opts: &FdCheckOptions<S>,
) -> Result<WhatIfResult<S>, WhatIfError> {
    compute_whatif_inner(system, dispatch, Some(opts))
}

fn compute_whatif_inner<S: Real>(
    system: &EnergySystem<S>,
    dispatch: &DispatchResult<S>,
    check: Option<&FdCheckOptions<S>>,
) -> Result<WhatIfResult<S>, WhatIfError> {
    assert!(dispatch.sol.is_optimal(), "dispatch must be optimal");
    let commodities = system.demanded_commodities();
    let fd_step = check
        .and_then(|o| o.eps_gwh)
        .unwrap_or_else(|| default_fd_step(system));

    let basis = BasisSystem::new(&dispatch.lp, &dispatch.sol).ok();
    let m_tot_col = dispatch.layout.col_total_co2();

    let mut result = WhatIfResult {
        commodities: commodities.clone(),
        value: BTreeMap::new(),
        method: BTreeMap::new(),
        degenerate: BTreeMap::new(),
        fd_value: BTreeMap::new(),
        fd_step_gwh: fd_step,
    };

    // Entry list in deterministic order.
    let entries: Vec<(usize, usize)> = commodities
        .iter()
        .flat_map(|&ci| (0..system.steps).map(move |t| (ci, t)))
        .collect();

    for &(ci, t) in &entries {
        let demand_proc = *system
            .demand_processes_of(&system.commodities[ci].id)
            .first()
            .expect("demanded commodity has a demand process");
        let row = dispatch.row_index[&RowTag::DemandFix {
            process: demand_proc,
            step: t,
        }];
        match &basis {
            Some(sys) => {
                let dx = sys.solve(&[(row, S::one())]);
                result.value.insert((ci, t), dx[m_tot_col]);
                result.method.insert((ci, t), Method::BasisSolve);
            }
            None => {
                // Singular optimal basis: per-entry oracle fallback.
                let fd = fd_forward(system, dispatch.m_tot_t, ci, t, fd_step)?;
                result.value.insert((ci, t), fd);
                result.method.insert((ci, t), Method::FiniteDifference);
            }
        }
    }

    if let Some(opts) = check {
        let stride = match opts.sample {
            Some(n) if n > 0 && n < entries.len() => entries.len().div_ceil(n),
            _ => 1,
        };
        for (idx, &(ci, t)) in entries.iter().enumerate() {
            if idx % stride != 0 && stride > 1 {
                continue;
            }
            let fd = fd_forward(system, dispatch.m_tot_t, ci, t, fd_step)?;
            result.fd_value.insert((ci, t), fd);
            let v = result.value[&(ci, t)];
            if (v - fd).abs() > agreement_tol(fd) {
                // The basis derivative looks one-sided: report the
                // demand-increase value, keep both for inspection.
                result.degenerate.insert(
                    (ci, t),
                    OneSided {
                        forward: fd,
                        backward: None,
                    },
                );
                result.value.insert((ci, t), fd);
                result.method.insert((ci, t), Method::FiniteDifference);
            }
        }
    }

    Ok(result)
}

/// Forward/backward finite differences of total CO₂ with respect to the
/// demand of `commodity` at `step`, by full re-dispatch. Returns t/MWh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdEstimate<S> {
    pub forward: S,
    pub backward: Option<S>,
}

impl<S: Real> FdEstimate<S> {
    /// The reported value: the demand-increase derivative.
    pub fn value(&self) -> S {
        self.forward
    }

    pub fn is_degenerate(&self, tol: S) -> bool {
        match self.backward {
            Some(b) => (self.forward - b).abs() > tol,
            None => false,
        }
    }
}

/// The what-if oracle: `(M_tot(D + ε) − M_tot(D))/ε` by re-dispatch, plus
/// the backward difference when `D − ε` stays feasible.
pub fn finite_difference<S: Real>(
    system: &EnergySystem<S>,
    commodity: usize,
    step: usize,
    eps_gwh: S,
) -> Result<FdEstimate<S>, WhatIfError> {
    assert!(eps_gwh > S::zero(), "step must be positive");
    let base = solve_dispatch(system)?;
    let forward = fd_forward(system, base.m_tot_t, commodity, step, eps_gwh)?;
    let backward = fd_backward(system, base.m_tot_t, commodity, step, eps_gwh);
    Ok(FdEstimate { forward, backward })
}

fn fd_forward<S: Real>(
    system: &EnergySystem<S>,
    base_m_tot_t: S,
    commodity: usize,
    step: usize,
    eps: S,
) -> Result<S, WhatIfError> {
    let perturbed = perturbed_system(system, commodity, step, eps)?;
    match solve_dispatch(&perturbed) {
        Ok(d) => Ok((d.m_tot_t - base_m_tot_t) / (eps * real::<S>(1000.0))),
        Err(DispatchError::InfeasibleSystem) => Err(WhatIfError::InfeasiblePerturbation {
            commodity: system.commodities[commodity].id.clone(),
            step,
            eps: to_f64(eps),
        }),
        Err(e) => Err(e.into()),
    }
}

fn fd_backward<S: Real>(
    system: &EnergySystem<S>,
    base_m_tot_t: S,
    commodity: usize,
    step: usize,
    eps: S,
) -> Option<S> {
    let demand_proc = *system
        .demand_processes_of(&system.commodities[commodity].id)
        .first()?;
    let current = system.demands[&system.processes[demand_proc].id][step];
    if current < eps {
        return None;
    }
    let perturbed = perturbed_system(system, commodity, step, -eps).ok()?;
    match solve_dispatch(&perturbed) {
        Ok(d) => Some((base_m_tot_t - d.m_tot_t) / (eps * real::<S>(1000.0))),
        Err(_) => None,
    }
}

fn perturbed_system<S: Real>(
    system: &EnergySystem<S>,
    commodity: usize,
    step: usize,
    delta: S,
) -> Result<EnergySystem<S>, WhatIfError> {
    let demand_proc = system
        .demand_processes_of(&system.commodities[commodity].id)
        .first()
        .copied()
        .ok_or_else(|| WhatIfError::NoDemand(system.commodities[commodity].id.clone()))?;
    let mut out = system.clone();
    let series = out
        .demands
        .get_mut(&system.processes[demand_proc].id)
        .expect("validated demand series");
    series[step] = series[step] + delta;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::solve_dispatch;
    use crate::factory::{make_sc_system, ELECTRICITY};
    use crate::model::{Commodity, EnergySystem, Output, Process, ProcessKind};
    use std::collections::BTreeMap;

    #[test]
    fn zero_emission_slack_import_gives_zero() {
        let mut demands = BTreeMap::new();
        demands.insert("load".to_string(), vec![1.0, 2.0]);
        let sys: EnergySystem<f64> = EnergySystem {
            commodities: vec![Commodity::new("elec", "elec")],
            processes: vec![
                Process::new("hydro", ProcessKind::Import)
                    .output(Output::new("elec").capacity(10.0)),
                Process::new("load", ProcessKind::Demand).input("elec"),
            ],
            steps: 2,
            step_hours: 1.0,
            demands,
        };
        let d = solve_dispatch(&sys).unwrap();
        let w = compute_whatif(&sys, &d).unwrap();
        for t in 0..2 {
            assert!(w.value_at(0, t).abs() <= 1e-9);
        }
        let fd = finite_difference(&sys, 0, 1, 1e-4).unwrap();
        assert!(fd.forward.abs() <= 1e-9);
        assert!(fd.backward.unwrap().abs() <= 1e-9);
    }

    #[test]
    fn sc1_spp_marginal_hour_matches_oracle() {
        let sys: EnergySystem<f64> = make_sc_system(1).unwrap();
        let d = solve_dispatch(&sys).unwrap();
        let w = compute_whatif(&sys, &d).unwrap();
        let el = sys.commodity_index(ELECTRICITY).unwrap();
        // Hour 3: lignite below capacity, marginal unit is lignite.
        let expect = 0.41 / 0.45;
        assert!((w.value_at(el, 3) - expect).abs() <= 1e-6, "{}", w.value_at(el, 3));
        let fd = finite_difference(&sys, el, 3, 1e-4).unwrap();
        assert!((fd.forward - w.value_at(el, 3)).abs() <= 1e-6);
        // Hour 12: lignite at capacity, marginal unit is the gas CC.
        assert!((w.value_at(el, 12) - 0.20 / 0.60).abs() <= 1e-6);
    }

    #[test]
    fn infeasible_perturbation_is_reported() {
        let mut demands = BTreeMap::new();
        demands.insert("load".to_string(), vec![1.0]);
        let sys: EnergySystem<f64> = EnergySystem {
            commodities: vec![Commodity::new("elec", "elec")],
            processes: vec![
                Process::new("imp", ProcessKind::Import)
                    .output(Output::new("elec").capacity(1.0).co2(0.1)),
                Process::new("load", ProcessKind::Demand).input("elec"),
            ],
            steps: 1,
            step_hours: 1.0,
            demands,
        };
        // Demand already at the capacity limit; any increase is infeasible.
        match finite_difference(&sys, 0, 0, 0.5) {
            Err(WhatIfError::InfeasiblePerturbation { .. }) => {}
            other => panic!("expected infeasible perturbation, got {other:?}"),
        }
    }
}
