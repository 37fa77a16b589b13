//! Domain types for multi-modal energy systems.
//!
//! A system is a set of commodities (energy forms) and processes that
//! convert, store, import or consume them over an hourly horizon. All types
//! are plain data, immutable once constructed, and safe to share across
//! threads.
//!
//! Units: power in GW, energy in GWh, costs in currency/MWh, emission
//! factors in t/MWh, self-discharge as a fraction of the level per hour.

use std::collections::BTreeMap;
use std::fmt;

use crate::scalar::Real;

/// An energy form flowing between processes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Commodity {
    pub id: String,
    pub name: String,
}

impl Commodity {
    pub fn new(id: &str, name: &str) -> Self {
        Commodity {
            id: id.to_string(),
            name: name.to_string(),
        }
    }
}

/// Time-dependent fraction in `[0, 1]`, either constant or per step.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile<S> {
    Constant(S),
    Series(Vec<S>),
}

impl<S: Real> Profile<S> {
    pub fn at(&self, t: usize) -> S {
        match self {
            Profile::Constant(v) => *v,
            Profile::Series(vs) => vs[t],
        }
    }

    pub fn full() -> Self {
        Profile::Constant(S::one())
    }
}

/// How an output relates to the summed input energy of its process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Conversion<S> {
    /// `E_out = κ · ΣE_in` with a fixed efficiency.
    Fixed(S),
    /// `κ_min · ΣE_in ≤ E_out ≤ κ_max · ΣE_in`; output is dispatchable
    /// within the efficiency range.
    Flexible { min: S, max: S },
}

/// One produced commodity of a process.
#[derive(Debug, Clone, PartialEq)]
pub struct Output<S> {
    pub commodity: String,
    /// Conversion relation to the process inputs; `None` for processes
    /// without inputs (imports, storage discharge).
    pub conversion: Option<Conversion<S>>,
    /// Output power limit in GW; `None` means unbounded.
    pub capacity_gw: Option<S>,
    /// Variable cost attributed to this flow, currency/MWh.
    pub cost_per_mwh: S,
    /// CO₂ content attributed to this flow, t/MWh.
    pub co2_t_per_mwh: S,
    /// Availability factor per step, scaling the capacity.
    pub availability: Profile<S>,
}

impl<S: Real> Output<S> {
    pub fn new(commodity: &str) -> Self {
        Output {
            commodity: commodity.to_string(),
            conversion: None,
            capacity_gw: None,
            cost_per_mwh: S::zero(),
            co2_t_per_mwh: S::zero(),
            availability: Profile::full(),
        }
    }

    pub fn fixed_efficiency(mut self, kappa: S) -> Self {
        self.conversion = Some(Conversion::Fixed(kappa));
        self
    }

    pub fn flexible_efficiency(mut self, min: S, max: S) -> Self {
        self.conversion = Some(Conversion::Flexible { min, max });
        self
    }

    pub fn capacity(mut self, gw: S) -> Self {
        self.capacity_gw = Some(gw);
        self
    }

    pub fn cost(mut self, per_mwh: S) -> Self {
        self.cost_per_mwh = per_mwh;
        self
    }

    pub fn co2(mut self, t_per_mwh: S) -> Self {
        self.co2_t_per_mwh = t_per_mwh;
        self
    }

    pub fn availability(mut self, profile: Profile<S>) -> Self {
        self.availability = profile;
        self
    }
}

/// Storage parameters of a storage process.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageParams<S> {
    /// Fraction of charged energy that reaches the store, `(0, 1]`.
    pub charge_efficiency: S,
    /// Fraction of the level lost per hour, `[0, 1)`.
    pub self_discharge_per_hour: S,
    /// Energy capacity in GWh.
    pub energy_capacity_gwh: S,
    /// Level at the start of the horizon, GWh.
    pub initial_level_gwh: S,
    /// CO₂ attributed to the initial level, t.
    pub initial_co2_t: S,
}

/// Role of a process in the system.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcessKind<S> {
    /// Converts inputs to outputs within each step.
    Standard,
    /// Buffers one commodity over time.
    Storage(StorageParams<S>),
    /// Brings energy into the model; no inputs.
    Import,
    /// Final consumption; no outputs.
    Demand,
}

impl<S> ProcessKind<S> {
    pub fn label(&self) -> &'static str {
        match self {
            ProcessKind::Standard => "standard",
            ProcessKind::Storage(_) => "storage",
            ProcessKind::Import => "import",
            ProcessKind::Demand => "demand",
        }
    }
}

/// A conversion process: consumes `inputs`, produces `outputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Process<S> {
    pub id: String,
    pub kind: ProcessKind<S>,
    /// Consumed commodities (no parameters; conversion sits on the outputs).
    pub inputs: Vec<String>,
    pub outputs: Vec<Output<S>>,
}

impl<S: Real> Process<S> {
    pub fn new(id: &str, kind: ProcessKind<S>) -> Self {
        Process {
            id: id.to_string(),
            kind,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(mut self, commodity: &str) -> Self {
        self.inputs.push(commodity.to_string());
        self
    }

    pub fn output(mut self, output: Output<S>) -> Self {
        self.outputs.push(output);
        self
    }

    pub fn is_storage(&self) -> bool {
        matches!(self.kind, ProcessKind::Storage(_))
    }

    pub fn storage_params(&self) -> Option<&StorageParams<S>> {
        match &self.kind {
            ProcessKind::Storage(p) => Some(p),
            _ => None,
        }
    }
}

/// A multi-modal energy system over a fixed hourly horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySystem<S> {
    pub commodities: Vec<Commodity>,
    pub processes: Vec<Process<S>>,
    /// Number of time steps.
    pub steps: usize,
    /// Step length in hours.
    pub step_hours: S,
    /// Demand per step in GWh, keyed by demand-process id.
    pub demands: BTreeMap<String, Vec<S>>,
}

impl<S: Real> EnergySystem<S> {
    pub fn commodity_index(&self, id: &str) -> Option<usize> {
        self.commodities.iter().position(|c| c.id == id)
    }

    pub fn process_index(&self, id: &str) -> Option<usize> {
        self.processes.iter().position(|p| p.id == id)
    }

    /// Demand processes consuming the given commodity, in declaration order.
    pub fn demand_processes_of(&self, commodity: &str) -> Vec<usize> {
        self.processes
            .iter()
            .enumerate()
            .filter(|(_, p)| {
                matches!(p.kind, ProcessKind::Demand) && p.inputs.iter().any(|c| c == commodity)
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// Commodities that have at least one demand process, in declaration order.
    pub fn demanded_commodities(&self) -> Vec<usize> {
        self.commodities
            .iter()
            .enumerate()
            .filter(|(_, c)| !self.demand_processes_of(&c.id).is_empty())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn demand_series(&self, process_id: &str) -> Option<&[S]> {
        self.demands.get(process_id).map(|v| v.as_slice())
    }

    /// Peak demand of a commodity across its demand processes, GWh/step.
    pub fn peak_demand_of(&self, commodity: &str) -> S {
        let mut peak = S::zero();
        for &p in &self.demand_processes_of(commodity) {
            if let Some(series) = self.demands.get(&self.processes[p].id) {
                for &d in series {
                    peak = peak.max(d);
                }
            }
        }
        peak
    }
}

/// One violated invariant, with the ids of the objects involved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub object: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.object, self.message)
    }
}

/// All invariant violations found in a system; empty iff well-formed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    fn push(&mut self, object: &str, message: String) {
        self.findings.push(Finding {
            object: object.to_string(),
            message,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for finding in &self.findings {
            writeln!(f, "  - {finding}")?;
        }
        Ok(())
    }
}

/// Check every structural invariant; the report lists all violations.
pub fn validate<S: Real>(system: &EnergySystem<S>) -> ValidationReport {
    let mut report = ValidationReport::default();

    if system.steps == 0 {
        report.push("horizon", "must have at least one step".into());
    }
    if !(system.step_hours > S::zero()) {
        report.push("horizon", "step length must be positive".into());
    }

    for (i, c) in system.commodities.iter().enumerate() {
        if system.commodities[..i].iter().any(|o| o.id == c.id) {
            report.push(&c.id, "duplicate commodity id".into());
        }
    }
    for (i, p) in system.processes.iter().enumerate() {
        if system.processes[..i].iter().any(|o| o.id == p.id) {
            report.push(&p.id, "duplicate process id".into());
        }
    }

    let known = |id: &str| system.commodities.iter().any(|c| c.id == id);

    for p in &system.processes {
        for input in &p.inputs {
            if !known(input) {
                report.push(&p.id, format!("unknown commodity {input}"));
            }
        }
        for out in &p.outputs {
            if !known(&out.commodity) {
                report.push(&p.id, format!("unknown commodity {}", out.commodity));
            }
        }

        match &p.kind {
            ProcessKind::Import => {
                if !p.inputs.is_empty() {
                    report.push(&p.id, "import has inputs".into());
                }
                if p.outputs.is_empty() {
                    report.push(&p.id, "import has no outputs".into());
                }
            }
            ProcessKind::Demand => {
                if !p.outputs.is_empty() {
                    report.push(&p.id, "demand has outputs".into());
                }
                if p.inputs.is_empty() {
                    report.push(&p.id, "demand has no inputs".into());
                }
                match system.demands.get(&p.id) {
                    None => report.push(&p.id, "no demand series".into()),
                    Some(series) if series.len() != system.steps => report.push(
                        &p.id,
                        format!(
                            "demand series has {} entries, horizon has {}",
                            series.len(),
                            system.steps
                        ),
                    ),
                    _ => {}
                }
            }
            ProcessKind::Standard => {
                if p.inputs.is_empty() {
                    report.push(&p.id, "conversion process has no inputs".into());
                }
                if p.outputs.is_empty() {
                    report.push(&p.id, "conversion process has no outputs".into());
                }
            }
            ProcessKind::Storage(params) => {
                if p.inputs.len() != 1 || p.outputs.len() != 1 {
                    report.push(
                        &p.id,
                        "storage must have exactly one input and one output commodity".into(),
                    );
                } else if p.inputs[0] != p.outputs[0].commodity {
                    report.push(&p.id, "storage input and output commodities differ".into());
                }
                if !(params.charge_efficiency > S::zero() && params.charge_efficiency <= S::one())
                {
                    report.push(&p.id, "charge efficiency must be in (0, 1]".into());
                }
                if !(params.self_discharge_per_hour >= S::zero()
                    && params.self_discharge_per_hour < S::one())
                {
                    report.push(&p.id, "self-discharge must be in [0, 1)".into());
                }
                if params.energy_capacity_gwh < S::zero() {
                    report.push(&p.id, "energy capacity must be nonnegative".into());
                }
                if params.initial_level_gwh < S::zero()
                    || params.initial_level_gwh > params.energy_capacity_gwh
                {
                    report.push(&p.id, "initial level outside [0, capacity]".into());
                }
                if params.initial_co2_t < S::zero() {
                    report.push(&p.id, "initial CO2 must be nonnegative".into());
                }
            }
        }

        // Output parameter ranges.
        let conversion_allowed = matches!(p.kind, ProcessKind::Standard);
        for out in &p.outputs {
            match out.conversion {
                Some(Conversion::Fixed(k)) => {
                    if !(k > S::zero()) {
                        report.push(&p.id, format!("efficiency for {} must be > 0", out.commodity));
                    }
                    if !conversion_allowed {
                        report.push(
                            &p.id,
                            format!("{} process cannot have a conversion ratio", p.kind.label()),
                        );
                    }
                }
                Some(Conversion::Flexible { min, max }) => {
                    if !(min >= S::zero() && min <= max) {
                        report.push(
                            &p.id,
                            format!("flexible range for {} must satisfy 0 ≤ min ≤ max", out.commodity),
                        );
                    }
                    if !conversion_allowed {
                        report.push(
                            &p.id,
                            format!("{} process cannot have a conversion ratio", p.kind.label()),
                        );
                    }
                }
                None => {
                    if conversion_allowed {
                        report.push(
                            &p.id,
                            format!("output {} of a conversion process needs an efficiency", out.commodity),
                        );
                    }
                }
            }
            if let Some(cap) = out.capacity_gw {
                if cap < S::zero() {
                    report.push(&p.id, format!("capacity for {} is negative", out.commodity));
                }
            }
            match &out.availability {
                Profile::Constant(v) => {
                    if *v < S::zero() || *v > S::one() {
                        report.push(&p.id, format!("availability for {} outside [0, 1]", out.commodity));
                    }
                }
                Profile::Series(vs) => {
                    if vs.len() != system.steps {
                        report.push(
                            &p.id,
                            format!(
                                "availability series for {} has {} entries, horizon has {}",
                                out.commodity,
                                vs.len(),
                                system.steps
                            ),
                        );
                    }
                    if vs.iter().any(|v| *v < S::zero() || *v > S::one()) {
                        report.push(&p.id, format!("availability for {} outside [0, 1]", out.commodity));
                    }
                }
            }
        }
    }

    // Demand series that do not belong to any demand process.
    for key in system.demands.keys() {
        match system.processes.iter().find(|p| &p.id == key) {
            None => report.push(key, "demand series for unknown process".into()),
            Some(p) if !matches!(p.kind, ProcessKind::Demand) => {
                report.push(key, "demand series attached to a non-demand process".into())
            }
            _ => {}
        }
    }

    // Every demanded commodity must be producible: seed with import outputs
    // and charged storage, then close over processes whose inputs are all
    // reachable.
    let mut producible: Vec<bool> = vec![false; system.commodities.len()];
    for p in &system.processes {
        let seed = match &p.kind {
            ProcessKind::Import => true,
            ProcessKind::Storage(params) => params.initial_level_gwh > S::zero(),
            _ => false,
        };
        if seed {
            for out in &p.outputs {
                if let Some(i) = system.commodity_index(&out.commodity) {
                    producible[i] = true;
                }
            }
        }
    }
    loop {
        let mut changed = false;
        for p in &system.processes {
            if matches!(p.kind, ProcessKind::Import | ProcessKind::Demand) {
                continue;
            }
            let inputs_ok = p
                .inputs
                .iter()
                .all(|c| system.commodity_index(c).map(|i| producible[i]).unwrap_or(false));
            if inputs_ok && !p.inputs.is_empty() {
                for out in &p.outputs {
                    if let Some(i) = system.commodity_index(&out.commodity) {
                        if !producible[i] {
                            producible[i] = true;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    for p in &system.processes {
        if !matches!(p.kind, ProcessKind::Demand) {
            continue;
        }
        let has_demand = system
            .demands
            .get(&p.id)
            .map(|s| s.iter().any(|&d| d > S::zero()))
            .unwrap_or(false);
        if !has_demand {
            continue;
        }
        for input in &p.inputs {
            if let Some(i) = system.commodity_index(input) {
                if !producible[i] {
                    report.push(&p.id, format!("demanded commodity {input} has no producing path"));
                }
            }
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factory::make_sc_system;

    #[test]
    fn factory_system_is_valid() {
        let sys: EnergySystem<f64> = make_sc_system(1).unwrap();
        let report = validate(&sys);
        assert!(report.is_empty(), "unexpected findings: {report}");
    }

    #[test]
    fn demand_with_outputs_is_flagged() {
        let mut sys: EnergySystem<f64> = make_sc_system(1).unwrap();
        let demand = sys
            .processes
            .iter_mut()
            .find(|p| matches!(p.kind, ProcessKind::Demand))
            .unwrap();
        demand.outputs.push(Output::new("electricity"));
        let report = validate(&sys);
        assert!(report
            .findings
            .iter()
            .any(|f| f.message.contains("demand has outputs")));
    }

    #[test]
    fn unknown_commodity_is_flagged() {
        let mut sys: EnergySystem<f64> = make_sc_system(1).unwrap();
        sys.processes[0].outputs[0].commodity = "plasma".into();
        let report = validate(&sys);
        assert!(report
            .findings
            .iter()
            .any(|f| f.message.contains("unknown commodity plasma")));
    }

    #[test]
    fn unproducible_demand_is_flagged() {
        let mut sys: EnergySystem<f64> = make_sc_system(1).unwrap();
        sys.processes.retain(|p| matches!(p.kind, ProcessKind::Demand));
        let report = validate(&sys);
        assert!(report
            .findings
            .iter()
            .any(|f| f.message.contains("no producing path")));
    }
}
