//! Flow-traced ("as-is") CO₂ intensities.
//!
//! Every energy flow carries the CO₂ attributed to its production. Per time
//! step and process: inflowing CO₂ aggregates over the consumed commodities
//! at their intensities; a conversion process splits it over its outputs
//! proportional to the produced energy; a store keeps a CO₂ account that
//! discharging draws down at the intensity the content had at the start of
//! the step; imports inject CO₂ at their emission factor. Together with the
//! defining relations `I·ΣE_out = ΣM_out` and `I_stor·SL = M_stor` this is
//! one sparse linear system over all commodities, stores and steps, solved
//! simultaneously — which is what resolves conversion cycles (power-to-gas)
//! and storage coupling across time.
//!
//! Near-zero denominators (no production, empty store) are replaced by
//! pinning rules and the affected entries are flagged.

use std::collections::BTreeSet;

use crate::dispatch::{DispatchResult, LpLayout};
use crate::error::TraceError;
use crate::lu::SparseLu;
use crate::model::{EnergySystem, ProcessKind};
use crate::scalar::{real, Real};
use crate::sparse::CscMatrix;

/// Threshold below which a denominator counts as zero, GWh.
pub const EPSILON_GWH: f64 = 1e-6;

/// Observed flows the tracer runs on: a dispatch optimum or any measured
/// dataset with the same shape.
#[derive(Debug, Clone)]
pub struct Flows<S> {
    pub layout: LpLayout,
    /// `[out flow][t]`, GWh.
    pub e_out: Vec<Vec<S>>,
    /// `[in flow][t]`, GWh.
    pub e_in: Vec<Vec<S>>,
    /// `[storage][t]`, end-of-step level, GWh.
    pub levels: Vec<Vec<S>>,
}

impl<S: Real> Flows<S> {
    pub fn from_dispatch(dispatch: &DispatchResult<S>) -> Self {
        Flows {
            layout: dispatch.layout.clone(),
            e_out: dispatch.e_out.clone(),
            e_in: dispatch.e_in.clone(),
            levels: dispatch.levels.clone(),
        }
    }
}

/// An entry pinned because its denominator was below [`EPSILON_GWH`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ThresholdFlag {
    /// `I(co,t)` pinned to zero: the commodity was not produced at `t`.
    Commodity { commodity: usize, step: usize },
    /// `I_stor(cp,t)` pinned to its previous value: the store was empty.
    Storage { process: usize, step: usize },
}

/// Unknowns of the trace system, in assembly order.
#[derive(Debug, Clone)]
pub struct TraceVars {
    pub steps: usize,
    pub n_commodities: usize,
    pub n_storages: usize,
    /// Processes with at least one input (conversion, storage, demand).
    pub consuming: Vec<usize>,
    pub n_out_flows: usize,
}

impl TraceVars {
    fn block(&self) -> usize {
        self.n_commodities
            + self.n_storages
            + self.consuming.len()
            + self.n_out_flows
            + self.n_storages
    }

    pub fn n_vars(&self) -> usize {
        self.steps * self.block()
    }

    pub fn intensity(&self, commodity: usize, t: usize) -> usize {
        t * self.block() + commodity
    }

    pub fn storage_intensity(&self, k: usize, t: usize) -> usize {
        t * self.block() + self.n_commodities + k
    }

    pub fn m_in(&self, consuming_k: usize, t: usize) -> usize {
        t * self.block() + self.n_commodities + self.n_storages + consuming_k
    }

    pub fn m_out(&self, flow_k: usize, t: usize) -> usize {
        t * self.block() + self.n_commodities + self.n_storages + self.consuming.len() + flow_k
    }

    pub fn m_stor(&self, k: usize, t: usize) -> usize {
        t * self.block()
            + self.n_commodities
            + self.n_storages
            + self.consuming.len()
            + self.n_out_flows
            + k
    }

    pub fn consuming_index(&self, process: usize) -> Option<usize> {
        self.consuming.iter().position(|&p| p == process)
    }
}

/// The assembled trace system `A v = rhs` plus the pinning flags.
#[derive(Debug, Clone)]
pub struct TraceSystem<S> {
    pub vars: TraceVars,
    pub matrix: CscMatrix<S>,
    pub rhs: Vec<S>,
    pub thresholded: BTreeSet<ThresholdFlag>,
}

/// Assemble the trace equations for a system and its observed flows.
/// CO₂ is carried in kilotonnes internally (t/MWh × GWh).
pub fn build_asis_system<S: Real>(system: &EnergySystem<S>, flows: &Flows<S>) -> TraceSystem<S> {
    let layout = &flows.layout;
    let steps = layout.steps;
    let eps = real::<S>(EPSILON_GWH);
    let vars = TraceVars {
        steps,
        n_commodities: system.commodities.len(),
        n_storages: layout.storages.len(),
        consuming: (0..system.processes.len())
            .filter(|&p| !system.processes[p].inputs.is_empty())
            .collect(),
        n_out_flows: layout.out_flows.len(),
    };

    let mut triplets: Vec<(usize, usize, S)> = Vec::new();
    let mut rhs = vec![S::zero(); vars.n_vars()];
    let mut thresholded = BTreeSet::new();
    let mut row = 0usize;
    let push = |triplets: &mut Vec<(usize, usize, S)>, row: usize, col: usize, v: S| {
        triplets.push((row, col, v));
    };

    // Initial storage intensity, t/MWh (= kt/GWh), from tonnes-valued input.
    let istor_init: Vec<S> = layout
        .storages
        .iter()
        .map(|&p| {
            let params = system.processes[p].storage_params().unwrap();
            if params.initial_level_gwh >= eps {
                params.initial_co2_t / real::<S>(1000.0) / params.initial_level_gwh
            } else {
                S::zero()
            }
        })
        .collect();

    for t in 0..steps {
        // Commodity intensity definition: I·ΣE_out = ΣM_out, or pin to zero.
        for ci in 0..vars.n_commodities {
            let production: S = layout
                .out_flows
                .iter()
                .enumerate()
                .filter(|(_, f)| f.commodity == ci)
                .map(|(k, _)| flows.e_out[k][t])
                .sum();
            let r = row;
            row += 1;
            debug_assert_eq!(r, vars.intensity(ci, t));
            if production >= eps {
                push(&mut triplets, r, vars.intensity(ci, t), production);
                for (k, f) in layout.out_flows.iter().enumerate() {
                    if f.commodity == ci {
                        push(&mut triplets, r, vars.m_out(k, t), -S::one());
                    }
                }
            } else {
                push(&mut triplets, r, vars.intensity(ci, t), S::one());
                thresholded.insert(ThresholdFlag::Commodity { commodity: ci, step: t });
            }
        }

        // Storage intensity definition: I_stor·SL = M_stor, or carry forward.
        for k in 0..vars.n_storages {
            let r = row;
            row += 1;
            debug_assert_eq!(r, vars.storage_intensity(k, t));
            let level = flows.levels[k][t];
            if level >= eps {
                push(&mut triplets, r, vars.storage_intensity(k, t), level);
                push(&mut triplets, r, vars.m_stor(k, t), -S::one());
            } else {
                push(&mut triplets, r, vars.storage_intensity(k, t), S::one());
                if t == 0 {
                    rhs[r] = istor_init[k];
                } else {
                    push(&mut triplets, r, vars.storage_intensity(k, t - 1), -S::one());
                }
                thresholded.insert(ThresholdFlag::Storage {
                    process: layout.storages[k],
                    step: t,
                });
            }
        }

        // Inflowing CO₂ per consuming process: M_in = Σ E_in·I(co).
        for (ck, &p) in vars.consuming.iter().enumerate() {
            let r = row;
            row += 1;
            debug_assert_eq!(r, vars.m_in(ck, t));
            push(&mut triplets, r, vars.m_in(ck, t), S::one());
            for (k, f) in layout.in_flows.iter().enumerate() {
                if f.process == p {
                    let e = flows.e_in[k][t];
                    if e != S::zero() {
                        push(&mut triplets, r, vars.intensity(f.commodity, t), -e);
                    }
                }
            }
        }

        // Outflowing CO₂ per produced flow.
        for (k, f) in layout.out_flows.iter().enumerate() {
            let r = row;
            row += 1;
            debug_assert_eq!(r, vars.m_out(k, t));
            push(&mut triplets, r, vars.m_out(k, t), S::one());
            let process = &system.processes[f.process];
            match &process.kind {
                ProcessKind::Import => {
                    // CO₂ injected at the boundary at the emission factor.
                    let eta = process.outputs[f.slot].co2_t_per_mwh;
                    rhs[r] = eta * flows.e_out[k][t];
                }
                ProcessKind::Standard => {
                    // Split of M_in proportional to produced energy.
                    let total_out: S = layout
                        .out_flows
                        .iter()
                        .enumerate()
                        .filter(|(_, g)| g.process == f.process)
                        .map(|(ok, _)| flows.e_out[ok][t])
                        .sum();
                    if total_out >= eps {
                        let ck = vars.consuming_index(f.process).unwrap();
                        let share = flows.e_out[k][t] / total_out;
                        push(&mut triplets, r, vars.m_in(ck, t), -share);
                    }
                    // idle process: M_out stays zero
                }
                ProcessKind::Storage(_) => {
                    // Withdrawn at the intensity the content had at the start
                    // of the step; losses are booked at charging, so the
                    // level decrease equals the delivered energy.
                    let sk = layout.storage_index(f.process).unwrap();
                    let e = flows.e_out[k][t];
                    if t == 0 {
                        rhs[r] = istor_init[sk] * e;
                    } else if e != S::zero() {
                        push(&mut triplets, r, vars.storage_intensity(sk, t - 1), -e);
                    }
                }
                ProcessKind::Demand => unreachable!("demands have no outputs"),
            }
        }

        // Storage CO₂ account: M_stor,t = M_stor,t-1 + M_in - ΣM_out.
        for (k, &p) in layout.storages.iter().enumerate() {
            let r = row;
            row += 1;
            debug_assert_eq!(r, vars.m_stor(k, t));
            push(&mut triplets, r, vars.m_stor(k, t), S::one());
            let ck = vars.consuming_index(p).unwrap();
            push(&mut triplets, r, vars.m_in(ck, t), -S::one());
            for (ok, f) in layout.out_flows.iter().enumerate() {
                if f.process == p {
                    push(&mut triplets, r, vars.m_out(ok, t), S::one());
                }
            }
            if t == 0 {
                let params = system.processes[p].storage_params().unwrap();
                rhs[r] = params.initial_co2_t / real::<S>(1000.0);
            } else {
                push(&mut triplets, r, vars.m_stor(k, t - 1), -S::one());
            }
        }
    }
    debug_assert_eq!(row, vars.n_vars());

    let matrix = CscMatrix::from_triplets(vars.n_vars(), vars.n_vars(), &triplets);
    TraceSystem {
        vars,
        matrix,
        rhs,
        thresholded,
    }
}

/// Global CO₂ bookkeeping of a trace solution, tonnes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Co2Conservation<S> {
    pub imported_t: S,
    pub initial_stored_t: S,
    pub demand_attributed_t: S,
    pub terminal_stored_t: S,
    /// `|in - out| / max(in, tiny)` where in = imported + initial stored.
    pub rel_residual: S,
}

/// As-is intensities and traced CO₂ flows.
#[derive(Debug, Clone)]
pub struct AsIsResult<S> {
    /// `[commodity][t]`, t/MWh.
    pub intensity: Vec<Vec<S>>,
    /// `[storage][t]` (aligned with the dispatch layout's storages), t/MWh.
    pub storage_intensity: Vec<Vec<S>>,
    /// `[process][t]`, tonnes; zero for processes without inputs.
    pub m_in_t: Vec<Vec<S>>,
    /// `[out flow][t]`, tonnes.
    pub m_out_t: Vec<Vec<S>>,
    /// `[storage][t]`, tonnes.
    pub m_stor_t: Vec<Vec<S>>,
    pub thresholded: BTreeSet<ThresholdFlag>,
    /// Largest equation residual of the solved system (kilotonne units).
    pub residual: S,
    pub conservation: Co2Conservation<S>,
}

impl<S: Real> AsIsResult<S> {
    pub fn is_flagged_commodity(&self, commodity: usize, step: usize) -> bool {
        self.thresholded
            .contains(&ThresholdFlag::Commodity { commodity, step })
    }

    pub fn is_flagged_storage(&self, process: usize, step: usize) -> bool {
        self.thresholded
            .contains(&ThresholdFlag::Storage { process, step })
    }
}

/// Solve the trace system for a dispatch optimum.
pub fn compute_asis<S: Real>(
    system: &EnergySystem<S>,
    dispatch: &DispatchResult<S>,
) -> Result<AsIsResult<S>, TraceError> {
    compute_asis_flows(system, &Flows::from_dispatch(dispatch))
}

/// Solve the trace system for arbitrary observed flows.
pub fn compute_asis_flows<S: Real>(
    system: &EnergySystem<S>,
    flows: &Flows<S>,
) -> Result<AsIsResult<S>, TraceError> {
    let trace = build_asis_system(system, flows);
    let n = trace.vars.n_vars();
    let lu = SparseLu::factorize(n, |k, out| out.extend(trace.matrix.col(k)))
        .map_err(|col| TraceError::SingularTraceSystem { col })?;
    let v = lu.solve(&trace.rhs);

    let residual = trace
        .matrix
        .mul_vec(&v)
        .iter()
        .zip(&trace.rhs)
        .map(|(&a, &b)| (a - b).abs())
        .fold(S::zero(), S::max);

    let vars = &trace.vars;
    let layout = &flows.layout;
    let steps = vars.steps;
    let kt = real::<S>(1000.0);

    let intensity: Vec<Vec<S>> = (0..vars.n_commodities)
        .map(|ci| (0..steps).map(|t| v[vars.intensity(ci, t)]).collect())
        .collect();
    let storage_intensity: Vec<Vec<S>> = (0..vars.n_storages)
        .map(|k| (0..steps).map(|t| v[vars.storage_intensity(k, t)]).collect())
        .collect();
    let mut m_in_t = vec![vec![S::zero(); steps]; system.processes.len()];
    for (ck, &p) in vars.consuming.iter().enumerate() {
        for t in 0..steps {
            m_in_t[p][t] = v[vars.m_in(ck, t)] * kt;
        }
    }
    let m_out_t: Vec<Vec<S>> = (0..vars.n_out_flows)
        .map(|k| (0..steps).map(|t| v[vars.m_out(k, t)] * kt).collect())
        .collect();
    let m_stor_t: Vec<Vec<S>> = (0..vars.n_storages)
        .map(|k| (0..steps).map(|t| v[vars.m_stor(k, t)] * kt).collect())
        .collect();

    // Global conservation: imports + initial storage = demands + terminal.
    let mut imported = S::zero();
    for (k, f) in layout.out_flows.iter().enumerate() {
        if matches!(system.processes[f.process].kind, ProcessKind::Import) {
            imported = imported + m_out_t[k].iter().copied().sum();
        }
    }
    let mut demand_attributed = S::zero();
    for (p, proc) in system.processes.iter().enumerate() {
        if matches!(proc.kind, ProcessKind::Demand) {
            demand_attributed = demand_attributed + m_in_t[p].iter().copied().sum();
        }
    }
    let mut initial_stored = S::zero();
    let mut terminal_stored = S::zero();
    for (k, &p) in layout.storages.iter().enumerate() {
        initial_stored = initial_stored + system.processes[p].storage_params().unwrap().initial_co2_t;
        if steps > 0 {
            terminal_stored = terminal_stored + m_stor_t[k][steps - 1];
        }
    }
    let inflow = imported + initial_stored;
    let outflow = demand_attributed + terminal_stored;
    let rel_residual = (inflow - outflow).abs() / inflow.max(real::<S>(1e-9));

    Ok(AsIsResult {
        intensity,
        storage_intensity,
        m_in_t,
        m_out_t,
        m_stor_t,
        thresholded: trace.thresholded,
        residual,
        conservation: Co2Conservation {
            imported_t: imported,
            initial_stored_t: initial_stored,
            demand_attributed_t: demand_attributed,
            terminal_stored_t: terminal_stored,
            rel_residual,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::solve_dispatch;
    use crate::model::{Commodity, EnergySystem, Output, Process};
    use std::collections::BTreeMap;

    fn single_import_system() -> EnergySystem<f64> {
        let mut demands = BTreeMap::new();
        demands.insert("load".to_string(), vec![1.0]);
        EnergySystem {
            commodities: vec![Commodity::new("elec", "elec")],
            processes: vec![
                Process::new("import", ProcessKind::Import)
                    .output(Output::new("elec").co2(0.2)),
                Process::new("load", ProcessKind::Demand).input("elec"),
            ],
            steps: 1,
            step_hours: 1.0,
            demands,
        }
    }

    #[test]
    fn one_hop_trace() {
        let sys = single_import_system();
        let d = solve_dispatch(&sys).unwrap();
        let asis = compute_asis(&sys, &d).unwrap();
        // import of 1 GWh at 0.2 t/MWh => 200 t, intensity 0.2
        assert!((asis.m_out_t[0][0] - 200.0).abs() < 1e-9);
        assert!((asis.intensity[0][0] - 0.2).abs() < 1e-12);
        assert!(asis.conservation.rel_residual < 1e-12);
    }

    #[test]
    fn proportional_split_across_outputs() {
        // Conversion with outputs 2 and 1 and M_in from a 0.1 t/MWh fuel:
        // inflow 0.3 kt splits 0.2 / 0.1.
        let mut demands = BTreeMap::new();
        demands.insert("load_a".to_string(), vec![2.0]);
        demands.insert("load_b".to_string(), vec![1.0]);
        let sys: EnergySystem<f64> = EnergySystem {
            commodities: vec![
                Commodity::new("fuel", "fuel"),
                Commodity::new("a", "a"),
                Commodity::new("b", "b"),
            ],
            processes: vec![
                Process::new("fuel_import", ProcessKind::Import)
                    .output(Output::new("fuel").co2(0.1).cost(1.0)),
                Process::new("conv", ProcessKind::Standard)
                    .input("fuel")
                    .output(Output::new("a").fixed_efficiency(2.0 / 3.0))
                    .output(Output::new("b").fixed_efficiency(1.0 / 3.0)),
                Process::new("load_a", ProcessKind::Demand).input("a"),
                Process::new("load_b", ProcessKind::Demand).input("b"),
            ],
            steps: 1,
            step_hours: 1.0,
            demands,
        };
        let d = solve_dispatch(&sys).unwrap();
        let asis = compute_asis(&sys, &d).unwrap();
        let conv = sys.process_index("conv").unwrap();
        let ka = d.layout.out_flow_index(conv, 1).unwrap();
        let kb = d.layout.out_flow_index(conv, 2).unwrap();
        assert!((asis.m_out_t[ka][0] - 200.0).abs() < 1e-9);
        assert!((asis.m_out_t[kb][0] - 100.0).abs() < 1e-9);
        assert!((asis.m_in_t[conv][0] - 300.0).abs() < 1e-9);
    }

    #[test]
    fn power_to_gas_cycle_stays_solvable() {
        // Two-process cycle with hand-built steady flows: the simultaneous
        // solve resolves the circular intensities. Reducing the 2x2 system
        // by hand: I(el) = 1.21·I(gas)/0.6655 and
        // I(gas)·1.21 = 0.2 + 0.3·I(el), so
        // I(gas) = 0.2/(1.21 − 0.3·1.21/0.6655).
        let sys: EnergySystem<f64> = EnergySystem {
            commodities: vec![Commodity::new("gas", "gas"), Commodity::new("elec", "elec")],
            processes: vec![
                Process::new("gas_import", ProcessKind::Import)
                    .output(Output::new("gas").co2(0.2)),
                Process::new("plant", ProcessKind::Standard)
                    .input("gas")
                    .output(Output::new("elec").fixed_efficiency(0.55)),
                Process::new("p2g", ProcessKind::Standard)
                    .input("elec")
                    .output(Output::new("gas").fixed_efficiency(0.7)),
                Process::new("load", ProcessKind::Demand).input("elec"),
            ],
            steps: 1,
            step_hours: 1.0,
            demands: {
                let mut m = BTreeMap::new();
                m.insert("load".to_string(), vec![0.3655]);
                m
            },
        };
        let layout = LpLayout::new(&sys);
        // steady flows: import 1.0 gas; plant consumes 1.21 gas -> 0.6655 el;
        // p2g consumes 0.3 el -> 0.21 gas; demand 0.3655 el.
        let flows = Flows {
            e_out: vec![vec![1.0], vec![0.6655], vec![0.21]],
            e_in: vec![vec![1.21], vec![0.3], vec![0.3655]],
            levels: vec![],
            layout,
        };
        let asis = compute_asis_flows(&sys, &flows).unwrap();
        assert!(asis.residual <= 1e-9, "residual {}", asis.residual);
        let i_gas = asis.intensity[0][0];
        let i_el = asis.intensity[1][0];
        let expect_gas = 0.2 / (1.21 - 0.3 * 1.21 / 0.6655);
        assert!((i_gas - expect_gas).abs() < 1e-9, "{i_gas} vs {expect_gas}");
        assert!((i_el - 1.21 * i_gas / 0.6655).abs() < 1e-9);
        assert!(i_gas.is_finite() && i_el.is_finite());
        assert!(asis.conservation.rel_residual < 1e-9);
    }
}
