//! Built-in example systems.
//!
//! Two families: a single-commodity electricity system (`sc`) exercising
//! merit order, renewables and electric storage, and a multi-commodity
//! electricity+heat+gas system (`mc`) exercising sector coupling through a
//! CHP plant, an electric heater and a thermal store.

use std::collections::BTreeMap;

use crate::error::ModelError;
use crate::model::{
    Commodity, EnergySystem, Output, Process, ProcessKind, Profile, StorageParams,
};
use crate::scalar::{real, Real};

pub const ELECTRICITY: &str = "electricity";
pub const HEAT: &str = "heat";
pub const GAS: &str = "gas";

/// Peak electric demand of the SC system, GW.
const SC_PEAK_DEMAND: f64 = 1.5;
/// Hour at which the SC demand ramp reaches its peak.
const SC_RAMP_END: f64 = 10.0;
/// Lignite steam power plant: output cap and effective CO₂ per MWh(el).
const SC_SPP_CAP: f64 = 0.75;
const SC_SPP_CO2: f64 = 0.41 / 0.45;
/// Gas combined cycle: unbounded, CO₂ per MWh(el).
const SC_CC_CO2: f64 = 0.20 / 0.60;
/// PV output cap in GW.
const SC_PV_CAP: f64 = 1.3;
/// Variable costs, currency/MWh; only the ordering PV < lignite < gas matters.
const SC_COST_PV: f64 = 0.0;
const SC_COST_SPP: f64 = 30.0;
const SC_COST_CC: f64 = 50.0;
/// Electric storage of scenario 2: lossless conversion, 1%/h self-discharge.
/// The 6 GWh capacity is a modeling choice large enough never to bind.
const SC_STORE_CAP_GWH: f64 = 6.0;
const SC_STORE_SELF_DISCHARGE: f64 = 0.01;

/// MC electric base demand, GW (constant).
const MC_ELEC_BASE: f64 = 1.0;
/// MC heat base demand: day-periodic sinusoid between a small floor and an
/// evening peak. The 2 GW peak keeps the daily heat balance in deficit so
/// that every hour of co-generated surplus heat is worth storing; the floor
/// keeps the heat system alive around the trough.
const MC_HEAT_PEAK: f64 = 2.0;
const MC_HEAT_FLOOR: f64 = 0.2;
/// Trough hour of the heat sinusoid.
const MC_HEAT_TROUGH_HOUR: f64 = 8.0;
/// CHP efficiencies: fixed electric, flexible heat up to 80% total fuel use
/// (0.80 − 0.35 of the gas per unit of heat).
const MC_CHP_ELEC_EFF: f64 = 0.35;
const MC_CHP_HEAT_MAX: f64 = 0.45;
/// Gas CO₂ content, t/MWh, and its price (system cost is gas consumption).
const MC_GAS_CO2: f64 = 0.20;
const MC_GAS_COST: f64 = 1.0;
/// Thermal store: 5% charging loss, 1%/h self-discharge. The capacity is
/// sized to absorb all scenario-1 surplus heat and to make the scenario-2
/// store last into the second morning's falling demand.
const MC_STORE_CAP_GWH: f64 = 4.45;
const MC_STORE_CHARGE_EFF: f64 = 0.95;
const MC_STORE_SELF_DISCHARGE: f64 = 0.01;
/// PV sizing margin in scenario 2: enough for peak heat plus charging the
/// store over half a day, with room left for curtailment.
const MC_PV_MARGIN: f64 = 1.3;
const MC_PV_CHARGE_SPREAD_H: f64 = 12.0;

/// The single-commodity electricity system.
///
/// Scenario 1: lignite steam power plant, gas combined cycle and PV serve a
/// demand that ramps from zero to 1.5 GW at hour 10 and then holds.
/// Scenario 2 adds the electric storage.
pub fn make_sc_system<S: Real>(scenario: u8) -> Result<EnergySystem<S>, ModelError> {
    if !(1..=2).contains(&scenario) {
        return Err(ModelError::InvalidScenario(scenario, "1|2"));
    }
    let steps = 24usize;
    let demand: Vec<S> = (0..steps)
        .map(|t| real(SC_PEAK_DEMAND * (t as f64).min(SC_RAMP_END) / SC_RAMP_END))
        .collect();
    let pv_avail: Vec<S> = (0..steps).map(|t| real(sc_pv_availability(t as f64))).collect();

    let mut processes = vec![
        Process::new("spp", ProcessKind::Import).output(
            Output::new(ELECTRICITY)
                .capacity(real(SC_SPP_CAP))
                .cost(real(SC_COST_SPP))
                .co2(real(SC_SPP_CO2)),
        ),
        Process::new("gas_cc", ProcessKind::Import).output(
            Output::new(ELECTRICITY)
                .cost(real(SC_COST_CC))
                .co2(real(SC_CC_CO2)),
        ),
        Process::new("pv", ProcessKind::Import).output(
            Output::new(ELECTRICITY)
                .capacity(real(SC_PV_CAP))
                .cost(real(SC_COST_PV))
                .availability(Profile::Series(pv_avail)),
        ),
    ];
    if scenario == 2 {
        processes.push(
            Process::new(
                "battery",
                ProcessKind::Storage(StorageParams {
                    charge_efficiency: S::one(),
                    self_discharge_per_hour: real(SC_STORE_SELF_DISCHARGE),
                    energy_capacity_gwh: real(SC_STORE_CAP_GWH),
                    initial_level_gwh: S::zero(),
                    initial_co2_t: S::zero(),
                }),
            )
            .input(ELECTRICITY)
            .output(Output::new(ELECTRICITY)),
        );
    }
    processes.push(Process::new("demand_el", ProcessKind::Demand).input(ELECTRICITY));

    let mut demands = BTreeMap::new();
    demands.insert("demand_el".to_string(), demand);

    Ok(EnergySystem {
        commodities: vec![Commodity::new(ELECTRICITY, "Electricity")],
        processes,
        steps,
        step_hours: S::one(),
        demands,
    })
}

/// PV availability of the SC system: zero until hour 10, linear rise to 1.0
/// at hour 17, linear fall to zero at hour 24.
fn sc_pv_availability(hour: f64) -> f64 {
    if hour <= 10.0 {
        0.0
    } else if hour <= 17.0 {
        (hour - 10.0) / 7.0
    } else {
        ((24.0 - hour) / 7.0).max(0.0)
    }
}

/// The multi-commodity electricity+heat system with a gas CHP.
///
/// Scenario 1: CHP, electric heater and thermal store cover 50% electric /
/// 100% heat demand over one day. Scenario 2: adds PV for one sunny day
/// followed by a dark one (48 h), no electric demand. Scenario 3: CHP only,
/// 100% electric / 30% heat demand.
pub fn make_mc_system<S: Real>(scenario: u8) -> Result<EnergySystem<S>, ModelError> {
    if !(1..=3).contains(&scenario) {
        return Err(ModelError::InvalidScenario(scenario, "1|2|3"));
    }
    let steps = if scenario == 2 { 48 } else { 24 };
    let (elec_share, heat_share) = match scenario {
        1 => (0.5, 1.0),
        2 => (0.0, 1.0),
        _ => (1.0, 0.3),
    };
    let elec_demand: Vec<S> = (0..steps).map(|_| real(MC_ELEC_BASE * elec_share)).collect();
    let heat_demand: Vec<S> = (0..steps)
        .map(|t| real(mc_heat_base(t as f64) * heat_share))
        .collect();

    let commodities = vec![
        Commodity::new(ELECTRICITY, "Electricity"),
        Commodity::new(HEAT, "Heat"),
        Commodity::new(GAS, "Natural gas"),
    ];

    let mut processes = vec![
        Process::new("gas_import", ProcessKind::Import).output(
            Output::new(GAS).cost(real(MC_GAS_COST)).co2(real(MC_GAS_CO2)),
        ),
        Process::new("chp", ProcessKind::Standard)
            .input(GAS)
            .output(Output::new(ELECTRICITY).fixed_efficiency(real(MC_CHP_ELEC_EFF)))
            .output(Output::new(HEAT).flexible_efficiency(S::zero(), real(MC_CHP_HEAT_MAX))),
    ];
    if scenario != 3 {
        processes.push(
            Process::new("heater", ProcessKind::Standard)
                .input(ELECTRICITY)
                .output(Output::new(HEAT).fixed_efficiency(S::one())),
        );
    }
    if scenario == 2 {
        let pv_cap = MC_PV_MARGIN
            * (MC_HEAT_PEAK * heat_share
                + MC_STORE_CAP_GWH / (MC_STORE_CHARGE_EFF * MC_PV_CHARGE_SPREAD_H));
        let pv_avail: Vec<S> = (0..steps)
            .map(|t| if t < 24 { S::one() } else { S::zero() })
            .collect();
        processes.push(
            Process::new("pv", ProcessKind::Import).output(
                Output::new(ELECTRICITY)
                    .capacity(real(pv_cap))
                    .availability(Profile::Series(pv_avail)),
            ),
        );
    }
    if scenario != 3 {
        processes.push(
            Process::new(
                "heat_store",
                ProcessKind::Storage(StorageParams {
                    charge_efficiency: real(MC_STORE_CHARGE_EFF),
                    self_discharge_per_hour: real(MC_STORE_SELF_DISCHARGE),
                    energy_capacity_gwh: real(MC_STORE_CAP_GWH),
                    initial_level_gwh: S::zero(),
                    initial_co2_t: S::zero(),
                }),
            )
            .input(HEAT)
            .output(Output::new(HEAT)),
        );
    }
    processes.push(Process::new("demand_el", ProcessKind::Demand).input(ELECTRICITY));
    processes.push(Process::new("demand_heat", ProcessKind::Demand).input(HEAT));

    let mut demands = BTreeMap::new();
    demands.insert("demand_el".to_string(), elec_demand);
    demands.insert("demand_heat".to_string(), heat_demand);

    Ok(EnergySystem {
        commodities,
        processes,
        steps,
        step_hours: S::one(),
        demands,
    })
}

/// Day-periodic heat demand base in GW; trough at hour 8, peak at hour 20.
fn mc_heat_base(hour: f64) -> f64 {
    let phase = 2.0 * std::f64::consts::PI * (hour - MC_HEAT_TROUGH_HOUR) / 24.0;
    MC_HEAT_FLOOR + (MC_HEAT_PEAK - MC_HEAT_FLOOR) * (0.5 - 0.5 * phase.cos())
}

/// Parse a builtin scenario name (`sc1`, `sc2`, `mc1`, `mc2`, `mc3`).
pub fn make_builtin<S: Real>(name: &str) -> Result<EnergySystem<S>, ModelError> {
    match name {
        "sc1" => make_sc_system(1),
        "sc2" => make_sc_system(2),
        "mc1" => make_mc_system(1),
        "mc2" => make_mc_system(2),
        "mc3" => make_mc_system(3),
        _ => Err(ModelError::InvalidScenario(0, "sc1|sc2|mc1|mc2|mc3")),
    }
}

/// All builtin scenario names in canonical order.
pub const BUILTIN_NAMES: [&str; 5] = ["sc1", "sc2", "mc1", "mc2", "mc3"];
