//! Translate an [`EnergySystem`] into a standard-form LP and solve the
//! cost-minimal dispatch.
//!
//! Columns: one per energy flow `E_out(cp,co,t)` and `E_in(co,cp,t)`, one
//! per storage level `SL(cp,t)`, plus a single total-CO₂ column. Rows:
//! process-internal balances (fixed or flexible conversion), per-commodity
//! energy balances, demand fixes, output capacities, storage recursion and
//! level bounds, flow nonnegativity, and the CO₂ accounting row. Every row
//! carries a semantic tag so analyses can locate it by meaning.
//!
//! Internal CO₂ unit: the accounting row multiplies t/MWh by GWh, so the
//! LP-level `M_tot` is in kilotonnes; public fields convert to tonnes.

use std::collections::BTreeMap;

use crate::error::DispatchError;
use crate::lp::{
    solve_with, ColTag, LpBuilder, LpSolution, RowKind, RowTag, SolveStatus, SolverOptions,
    StandardFormLp,
};
use crate::model::{Conversion, EnergySystem, ProcessKind, validate};
use crate::scalar::{real, Real};

/// Scale of the deterministic per-column cost perturbation that breaks ties
/// between equal-cost dispatches.
pub const COST_PERTURBATION_SCALE: f64 = 1e-9;

/// One produced flow `(process, output slot, commodity)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutFlow {
    pub process: usize,
    pub slot: usize,
    pub commodity: usize,
}

/// One consumed flow `(commodity, process)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InFlow {
    pub commodity: usize,
    pub process: usize,
}

/// Deterministic enumeration of LP columns for a system.
///
/// Per time step the block is `[out flows..., in flows..., levels...]`;
/// the total-CO₂ column comes last.
#[derive(Debug, Clone, PartialEq)]
pub struct LpLayout {
    pub steps: usize,
    pub out_flows: Vec<OutFlow>,
    pub in_flows: Vec<InFlow>,
    /// Process indices of storage processes.
    pub storages: Vec<usize>,
}

impl LpLayout {
    pub fn new<S: Real>(system: &EnergySystem<S>) -> Self {
        let mut out_flows = Vec::new();
        let mut in_flows = Vec::new();
        let mut storages = Vec::new();
        for (pi, p) in system.processes.iter().enumerate() {
            for (slot, out) in p.outputs.iter().enumerate() {
                out_flows.push(OutFlow {
                    process: pi,
                    slot,
                    commodity: system
                        .commodity_index(&out.commodity)
                        .expect("validated system"),
                });
            }
            for input in &p.inputs {
                in_flows.push(InFlow {
                    commodity: system.commodity_index(input).expect("validated system"),
                    process: pi,
                });
            }
            if p.is_storage() {
                storages.push(pi);
            }
        }
        LpLayout {
            steps: system.steps,
            out_flows,
            in_flows,
            storages,
        }
    }

    fn block(&self) -> usize {
        self.out_flows.len() + self.in_flows.len() + self.storages.len()
    }

    pub fn col_out(&self, k: usize, t: usize) -> usize {
        t * self.block() + k
    }

    pub fn col_in(&self, k: usize, t: usize) -> usize {
        t * self.block() + self.out_flows.len() + k
    }

    pub fn col_level(&self, k: usize, t: usize) -> usize {
        t * self.block() + self.out_flows.len() + self.in_flows.len() + k
    }

    pub fn col_total_co2(&self) -> usize {
        self.steps * self.block()
    }

    pub fn n_cols(&self) -> usize {
        self.col_total_co2() + 1
    }

    pub fn out_flow_index(&self, process: usize, commodity: usize) -> Option<usize> {
        self.out_flows
            .iter()
            .position(|f| f.process == process && f.commodity == commodity)
    }

    pub fn in_flow_index(&self, commodity: usize, process: usize) -> Option<usize> {
        self.in_flows
            .iter()
            .position(|f| f.commodity == commodity && f.process == process)
    }

    pub fn storage_index(&self, process: usize) -> Option<usize> {
        self.storages.iter().position(|&p| p == process)
    }

    /// In-flow indices belonging to one process.
    fn in_flows_of(&self, process: usize) -> Vec<usize> {
        (0..self.in_flows.len())
            .filter(|&k| self.in_flows[k].process == process)
            .collect()
    }
}

/// The LP of a system together with its column layout and row directory.
#[derive(Debug, Clone)]
pub struct BuiltLp<S> {
    pub lp: StandardFormLp<S>,
    pub layout: LpLayout,
    pub row_index: BTreeMap<RowTag, usize>,
}

/// Build the dispatch LP for a validated system.
pub fn build_lp<S: Real>(system: &EnergySystem<S>) -> BuiltLp<S> {
    let layout = LpLayout::new(system);
    let dt = system.step_hours;
    let mut b = LpBuilder::new();
    let mut row_index = BTreeMap::new();

    // Columns, in layout order.
    for t in 0..system.steps {
        for (k, f) in layout.out_flows.iter().enumerate() {
            let out = &system.processes[f.process].outputs[f.slot];
            let col = b.col(
                out.cost_per_mwh,
                ColTag::FlowOut {
                    process: f.process,
                    commodity: f.commodity,
                    step: t,
                },
            );
            debug_assert_eq!(col, layout.col_out(k, t));
        }
        for (k, f) in layout.in_flows.iter().enumerate() {
            let col = b.col(
                S::zero(),
                ColTag::FlowIn {
                    commodity: f.commodity,
                    process: f.process,
                    step: t,
                },
            );
            debug_assert_eq!(col, layout.col_in(k, t));
        }
        for (k, &p) in layout.storages.iter().enumerate() {
            let col = b.col(S::zero(), ColTag::StorageLevel { process: p, step: t });
            debug_assert_eq!(col, layout.col_level(k, t));
        }
    }
    let m_tot = b.col(S::zero(), ColTag::TotalCo2);
    debug_assert_eq!(m_tot, layout.col_total_co2());

    // Rows.
    for t in 0..system.steps {
        // Process-internal balances.
        for (pi, p) in system.processes.iter().enumerate() {
            if !matches!(p.kind, ProcessKind::Standard) {
                continue;
            }
            let input_cols: Vec<usize> = layout
                .in_flows_of(pi)
                .iter()
                .map(|&k| layout.col_in(k, t))
                .collect();
            for (slot, out) in p.outputs.iter().enumerate() {
                let co = system.commodity_index(&out.commodity).unwrap();
                let k_out = layout
                    .out_flows
                    .iter()
                    .position(|f| f.process == pi && f.slot == slot)
                    .unwrap();
                let out_col = layout.col_out(k_out, t);
                match out.conversion.expect("validated: standard outputs have a conversion") {
                    Conversion::Fixed(kappa) => {
                        let mut entries = vec![(out_col, S::one())];
                        for &c in &input_cols {
                            entries.push((c, -kappa));
                        }
                        let tag = RowTag::ProcessBalance { process: pi, commodity: co, step: t };
                        let r = b.row(RowKind::Eq, S::zero(), tag, &entries);
                        row_index.insert(tag, r);
                    }
                    Conversion::Flexible { min, max } => {
                        let mut up = vec![(out_col, S::one())];
                        for &c in &input_cols {
                            up.push((c, -max));
                        }
                        let tag = RowTag::FlexUpper { process: pi, commodity: co, step: t };
                        let r = b.row(RowKind::Le, S::zero(), tag, &up);
                        row_index.insert(tag, r);
                        if min > S::zero() {
                            let mut lo = vec![(out_col, -S::one())];
                            for &c in &input_cols {
                                lo.push((c, min));
                            }
                            let tag = RowTag::FlexLower { process: pi, commodity: co, step: t };
                            let r = b.row(RowKind::Le, S::zero(), tag, &lo);
                            row_index.insert(tag, r);
                        }
                    }
                }
            }
        }

        // Commodity-wide energy balances.
        for ci in 0..system.commodities.len() {
            let mut entries = Vec::new();
            for (k, f) in layout.out_flows.iter().enumerate() {
                if f.commodity == ci {
                    entries.push((layout.col_out(k, t), S::one()));
                }
            }
            for (k, f) in layout.in_flows.iter().enumerate() {
                if f.commodity == ci {
                    entries.push((layout.col_in(k, t), -S::one()));
                }
            }
            let tag = RowTag::EnergyBalance { commodity: ci, step: t };
            let r = b.row(RowKind::Eq, S::zero(), tag, &entries);
            row_index.insert(tag, r);
        }

        // Demands are fixed consumption.
        for (pi, p) in system.processes.iter().enumerate() {
            if !matches!(p.kind, ProcessKind::Demand) {
                continue;
            }
            let entries: Vec<(usize, S)> = layout
                .in_flows_of(pi)
                .iter()
                .map(|&k| (layout.col_in(k, t), S::one()))
                .collect();
            let demand = system.demands[&p.id][t];
            let tag = RowTag::DemandFix { process: pi, step: t };
            let r = b.row(RowKind::Eq, demand, tag, &entries);
            row_index.insert(tag, r);
        }

        // Storage recursion: SL_t = (1-sd)^dt SL_{t-1} + eta_ch ΣE_in - ΣE_out.
        for (k, &pi) in layout.storages.iter().enumerate() {
            let params = system.processes[pi].storage_params().unwrap();
            let keep = (S::one() - params.self_discharge_per_hour).powf(dt);
            let mut entries = vec![(layout.col_level(k, t), S::one())];
            for &ik in &layout.in_flows_of(pi) {
                entries.push((layout.col_in(ik, t), -params.charge_efficiency));
            }
            for (ok, f) in layout.out_flows.iter().enumerate() {
                if f.process == pi {
                    entries.push((layout.col_out(ok, t), S::one()));
                }
            }
            let rhs = if t == 0 {
                keep * params.initial_level_gwh
            } else {
                entries.push((layout.col_level(k, t - 1), -keep));
                S::zero()
            };
            let tag = RowTag::StorageBalance { process: pi, step: t };
            let r = b.row(RowKind::Eq, rhs, tag, &entries);
            row_index.insert(tag, r);
        }

        // Output capacity limits.
        for (k, f) in layout.out_flows.iter().enumerate() {
            let out = &system.processes[f.process].outputs[f.slot];
            if let Some(cap) = out.capacity_gw {
                let rhs = cap * out.availability.at(t) * dt;
                let tag = RowTag::Capacity { process: f.process, commodity: f.commodity, step: t };
                let r = b.row(RowKind::Le, rhs, tag, &[(layout.col_out(k, t), S::one())]);
                row_index.insert(tag, r);
            }
        }

        // Storage level bounds.
        for (k, &pi) in layout.storages.iter().enumerate() {
            let params = system.processes[pi].storage_params().unwrap();
            let lo = RowTag::LevelLower { process: pi, step: t };
            let r = b.row(RowKind::Le, S::zero(), lo, &[(layout.col_level(k, t), -S::one())]);
            row_index.insert(lo, r);
            let up = RowTag::LevelUpper { process: pi, step: t };
            let r = b.row(
                RowKind::Le,
                params.energy_capacity_gwh,
                up,
                &[(layout.col_level(k, t), S::one())],
            );
            row_index.insert(up, r);
        }

        // Flow nonnegativity.
        for (k, f) in layout.out_flows.iter().enumerate() {
            let tag = RowTag::NonNegOut { process: f.process, commodity: f.commodity, step: t };
            let r = b.row(RowKind::Le, S::zero(), tag, &[(layout.col_out(k, t), -S::one())]);
            row_index.insert(tag, r);
        }
        for (k, f) in layout.in_flows.iter().enumerate() {
            let tag = RowTag::NonNegIn { commodity: f.commodity, process: f.process, step: t };
            let r = b.row(RowKind::Le, S::zero(), tag, &[(layout.col_in(k, t), -S::one())]);
            row_index.insert(tag, r);
        }
    }

    // Total CO₂ accounting: M_tot - Σ η·E_out = 0 (kt when η is t/MWh and E is GWh).
    let mut co2_entries = vec![(m_tot, S::one())];
    for t in 0..system.steps {
        for (k, f) in layout.out_flows.iter().enumerate() {
            let eta = system.processes[f.process].outputs[f.slot].co2_t_per_mwh;
            if eta != S::zero() {
                co2_entries.push((layout.col_out(k, t), -eta));
            }
        }
    }
    let r = b.row(RowKind::Eq, S::zero(), RowTag::Co2Balance, &co2_entries);
    row_index.insert(RowTag::Co2Balance, r);

    let mut lp = b.build();
    // Deterministic tie-breaking between equal-cost dispatches.
    let n_cols = lp.cost.len();
    for (j, c) in lp.cost.iter_mut().enumerate() {
        *c = *c + real::<S>(COST_PERTURBATION_SCALE) * real::<S>((j + 1) as f64);
    }
    debug_assert_eq!(n_cols, layout.n_cols());

    BuiltLp { lp, layout, row_index }
}

/// Optimal dispatch of a system: all flows, storage levels, total CO₂ and
/// cost, plus the LP, its solution and the semantic row directory for
/// downstream sensitivity analysis.
#[derive(Debug, Clone)]
pub struct DispatchResult<S> {
    /// `[out flow][t]`, GWh.
    pub e_out: Vec<Vec<S>>,
    /// `[in flow][t]`, GWh.
    pub e_in: Vec<Vec<S>>,
    /// `[storage][t]`, GWh at the end of each step.
    pub levels: Vec<Vec<S>>,
    /// Total CO₂ emitted over the horizon, tonnes.
    pub m_tot_t: S,
    /// Dispatch cost in currency (at the unperturbed variable costs).
    pub cost: S,
    pub lp: StandardFormLp<S>,
    pub sol: LpSolution<S>,
    pub layout: LpLayout,
    pub row_index: BTreeMap<RowTag, usize>,
    /// Scale of the deterministic cost perturbation applied to the LP.
    pub cost_perturbation_scale: f64,
}

impl<S: Real> DispatchResult<S> {
    /// Produced energy of `(process, commodity)` at `t`, GWh.
    pub fn flow_out(&self, process: usize, commodity: usize, t: usize) -> S {
        self.layout
            .out_flow_index(process, commodity)
            .map(|k| self.e_out[k][t])
            .unwrap_or_else(S::zero)
    }

    /// Consumed energy of `(commodity, process)` at `t`, GWh.
    pub fn flow_in(&self, commodity: usize, process: usize, t: usize) -> S {
        self.layout
            .in_flow_index(commodity, process)
            .map(|k| self.e_in[k][t])
            .unwrap_or_else(S::zero)
    }

    /// Storage level of a storage process at the end of step `t`, GWh.
    pub fn level(&self, process: usize, t: usize) -> S {
        self.layout
            .storage_index(process)
            .map(|k| self.levels[k][t])
            .unwrap_or_else(S::zero)
    }

    /// Total production of a commodity at `t`, GWh.
    pub fn production(&self, commodity: usize, t: usize) -> S {
        self.layout
            .out_flows
            .iter()
            .enumerate()
            .filter(|(_, f)| f.commodity == commodity)
            .map(|(k, _)| self.e_out[k][t])
            .sum()
    }

    /// Total consumption of a commodity at `t`, GWh.
    pub fn consumption(&self, commodity: usize, t: usize) -> S {
        self.layout
            .in_flows
            .iter()
            .enumerate()
            .filter(|(_, f)| f.commodity == commodity)
            .map(|(k, _)| self.e_in[k][t])
            .sum()
    }
}

/// Validate, build and solve the dispatch LP.
pub fn solve_dispatch<S: Real>(system: &EnergySystem<S>) -> Result<DispatchResult<S>, DispatchError> {
    solve_dispatch_with(system, &SolverOptions::default())
}

/// As [`solve_dispatch`], with explicit solver options.
pub fn solve_dispatch_with<S: Real>(
    system: &EnergySystem<S>,
    opts: &SolverOptions<S>,
) -> Result<DispatchResult<S>, DispatchError> {
    let report = validate(system);
    if !report.is_empty() {
        return Err(DispatchError::Invalid(report));
    }
    let BuiltLp { lp, layout, row_index } = build_lp(system);
    let sol = solve_with(&lp, opts)?;
    match &sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible { .. } => return Err(DispatchError::InfeasibleSystem),
        SolveStatus::Unbounded { .. } => return Err(DispatchError::UnboundedModel),
    }

    let steps = system.steps;
    let e_out: Vec<Vec<S>> = (0..layout.out_flows.len())
        .map(|k| (0..steps).map(|t| sol.x[layout.col_out(k, t)]).collect())
        .collect();
    let e_in: Vec<Vec<S>> = (0..layout.in_flows.len())
        .map(|k| (0..steps).map(|t| sol.x[layout.col_in(k, t)]).collect())
        .collect();
    let levels: Vec<Vec<S>> = (0..layout.storages.len())
        .map(|k| (0..steps).map(|t| sol.x[layout.col_level(k, t)]).collect())
        .collect();

    let m_tot_t = sol.x[layout.col_total_co2()] * real::<S>(1000.0);
    let mut cost = S::zero();
    for (k, f) in layout.out_flows.iter().enumerate() {
        let c = system.processes[f.process].outputs[f.slot].cost_per_mwh;
        if c != S::zero() {
            let total: S = e_out[k].iter().copied().sum();
            cost = cost + c * total * real::<S>(1000.0);
        }
    }

    Ok(DispatchResult {
        e_out,
        e_in,
        levels,
        m_tot_t,
        cost,
        lp,
        sol,
        layout,
        row_index,
        cost_perturbation_scale: COST_PERTURBATION_SCALE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factory::{make_mc_system, make_sc_system, ELECTRICITY, GAS, HEAT};
    use crate::model::{Commodity, EnergySystem, Output, Process};
    use std::collections::BTreeMap;

    fn chain_system() -> EnergySystem<f64> {
        // import -> demand, D = 1 everywhere.
        let mut demands = BTreeMap::new();
        demands.insert("load".to_string(), vec![1.0, 1.0, 1.0]);
        EnergySystem {
            commodities: vec![Commodity::new("elec", "elec")],
            processes: vec![
                Process::new("import", ProcessKind::Import)
                    .output(Output::new("elec").cost(1.0).co2(0.2)),
                Process::new("load", ProcessKind::Demand).input("elec"),
            ],
            steps: 3,
            step_hours: 1.0,
            demands,
        }
    }

    #[test]
    fn import_chain_forced_by_balances() {
        let sys = chain_system();
        let d = solve_dispatch(&sys).unwrap();
        for t in 0..3 {
            assert!((d.flow_out(0, 0, t) - 1.0).abs() < 1e-9);
        }
        // M_tot = 0.2 t/MWh * 3 GWh = 600 t
        assert!((d.m_tot_t - 600.0).abs() < 1e-6, "m_tot {}", d.m_tot_t);
        assert!((d.cost - 3000.0).abs() < 1e-6);
    }

    #[test]
    fn sc1_merit_order_hour3() {
        let sys: EnergySystem<f64> = make_sc_system(1).unwrap();
        let d = solve_dispatch(&sys).unwrap();
        let spp = sys.process_index("spp").unwrap();
        let cc = sys.process_index("gas_cc").unwrap();
        let pv = sys.process_index("pv").unwrap();
        let el = sys.commodity_index(ELECTRICITY).unwrap();
        assert!((d.flow_out(spp, el, 3) - 0.45).abs() < 1e-7);
        assert!(d.flow_out(cc, el, 3).abs() < 1e-7);
        assert!(d.flow_out(pv, el, 3).abs() < 1e-7);
    }

    #[test]
    fn sc1_energy_balance_rows_tagged() {
        let sys: EnergySystem<f64> = make_sc_system(1).unwrap();
        let built = build_lp(&sys);
        let balance_rows = built
            .lp
            .row_tags
            .iter()
            .filter(|t| matches!(t, RowTag::EnergyBalance { .. }))
            .count();
        assert_eq!(balance_rows, 24);
        for t in 0..24 {
            assert!(built
                .row_index
                .contains_key(&RowTag::EnergyBalance { commodity: 0, step: t }));
        }
    }

    #[test]
    fn mc_chp_flexible_rows() {
        let sys: EnergySystem<f64> = make_mc_system(1).unwrap();
        let built = build_lp(&sys);
        let chp = sys.process_index("chp").unwrap();
        let heat = sys.commodity_index(HEAT).unwrap();
        // heat/gas in [0, 0.45] given elec/gas = 0.35: an upper flex row per
        // step; the zero lower bound is covered by nonnegativity.
        for t in 0..24 {
            let tag = RowTag::FlexUpper { process: chp, commodity: heat, step: t };
            let row = built.row_index[&tag];
            let coefs: Vec<(usize, f64)> = (0..built.lp.n_cols())
                .flat_map(|j| {
                    built.lp.matrix.col(j).filter(move |(r, _)| *r == row).map(move |(_, v)| (j, v))
                })
                .collect();
            let gas_in = built
                .layout
                .in_flow_index(sys.commodity_index(GAS).unwrap(), chp)
                .unwrap();
            let in_col = built.layout.col_in(gas_in, t);
            assert!(coefs.contains(&(in_col, -0.45)), "row {row}: {coefs:?}");
        }
    }

    #[test]
    fn dispatch_invariants_hold_on_builtins() {
        for name in crate::factory::BUILTIN_NAMES {
            let sys: EnergySystem<f64> = crate::factory::make_builtin(name).unwrap();
            let d = solve_dispatch(&sys).unwrap();
            let tol = 1e-7;
            for flows in d.e_out.iter().chain(&d.e_in) {
                for &f in flows {
                    assert!(f >= -tol, "{name}: negative flow {f}");
                }
            }
            // Per-commodity conservation.
            for ci in 0..sys.commodities.len() {
                for t in 0..sys.steps {
                    let residual = d.production(ci, t) - d.consumption(ci, t);
                    assert!(residual.abs() <= 1e-7, "{name}: balance residual {residual}");
                }
            }
            // Storage levels within bounds, recursion exact.
            for (k, &pi) in d.layout.storages.iter().enumerate() {
                let params = sys.processes[pi].storage_params().unwrap();
                let keep = 1.0 - params.self_discharge_per_hour;
                let mut prev = params.initial_level_gwh;
                for t in 0..sys.steps {
                    let level = d.levels[k][t];
                    assert!(level >= -tol && level <= params.energy_capacity_gwh + tol);
                    let charge: f64 = d
                        .layout
                        .in_flows
                        .iter()
                        .enumerate()
                        .filter(|(_, f)| f.process == pi)
                        .map(|(ik, _)| d.e_in[ik][t])
                        .sum();
                    let discharge: f64 = d
                        .layout
                        .out_flows
                        .iter()
                        .enumerate()
                        .filter(|(_, f)| f.process == pi)
                        .map(|(ok, _)| d.e_out[ok][t])
                        .sum();
                    let expect = keep * prev + params.charge_efficiency * charge - discharge;
                    assert!((level - expect).abs() <= 1e-7, "{name}: recursion residual");
                    prev = level;
                }
            }
            // CO₂ accounting row.
            let mut m_direct = 0.0;
            for (k, f) in d.layout.out_flows.iter().enumerate() {
                let eta = sys.processes[f.process].outputs[f.slot].co2_t_per_mwh;
                m_direct += eta * d.e_out[k].iter().sum::<f64>() * 1000.0;
            }
            assert!((d.m_tot_t - m_direct).abs() <= 1e-5 * (1.0 + m_direct.abs()));
        }
    }

    #[test]
    fn infeasible_system_reported() {
        // Demand exceeds the only (capped) producer.
        let mut sys = chain_system();
        sys.processes[0].outputs[0].capacity_gw = Some(0.5);
        match solve_dispatch(&sys) {
            Err(DispatchError::InfeasibleSystem) => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
    }
}
