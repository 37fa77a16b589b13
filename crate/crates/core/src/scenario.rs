//! Scenario files: a sectioned TOML format describing an energy system.
//!
//! Sections: `[horizon]`, `[[commodities]]`, `[[processes]]`, `[profiles]`
//! and `[demands]`. Time series are written inline or referenced from CSV
//! files (path relative to the scenario file, column selected by header).
//! Units are fixed: GW, GWh, hours, currency/MWh and t/MWh. Unknown keys
//! are rejected. `save → load` is the identity on well-formed systems.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::model::{
    validate, Commodity, Conversion, EnergySystem, Output, Process, ProcessKind, Profile,
    StorageParams,
};
use crate::scalar::{real, to_f64, Real};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    horizon: HorizonDoc,
    commodities: Vec<CommodityDoc>,
    processes: Vec<ProcessDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    profiles: BTreeMap<String, ProfileDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    demands: BTreeMap<String, SeriesRef>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HorizonDoc {
    steps: usize,
    step_hours: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CommodityDoc {
    id: String,
    name: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProcessDoc {
    id: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    inputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    outputs: Vec<OutputDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    storage: Option<StorageDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputDoc {
    commodity: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    efficiency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    efficiency_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    efficiency_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    capacity_gw: Option<f64>,
    #[serde(default, skip_serializing_if = "is_zero")]
    cost_per_mwh: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    co2_t_per_mwh: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    availability: Option<SeriesRef>,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StorageDoc {
    charge_efficiency: f64,
    self_discharge_per_hour: f64,
    energy_capacity_gwh: f64,
    initial_level_gwh: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    initial_co2_t: f64,
}

/// A named time series: inline values or a CSV file reference.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    column: Option<String>,
}

/// Where a series comes from: a constant, an inline list, or a named profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum SeriesRef {
    Constant(f64),
    Inline(Vec<f64>),
    Profile(String),
}

struct Resolver<'a> {
    path: String,
    base_dir: PathBuf,
    profiles: &'a BTreeMap<String, ProfileDoc>,
    steps: usize,
}

impl<'a> Resolver<'a> {
    fn series(&self, r: &SeriesRef) -> Result<Vec<f64>, ScenarioError> {
        match r {
            SeriesRef::Constant(v) => Ok(vec![*v; self.steps]),
            SeriesRef::Inline(vs) => Ok(vs.clone()),
            SeriesRef::Profile(name) => {
                let def = self.profiles.get(name).ok_or_else(|| ScenarioError::Parse {
                    path: self.path.clone(),
                    section: ", section [profiles]".into(),
                    message: format!("unknown profile {name}"),
                })?;
                match (&def.values, &def.csv) {
                    (Some(vs), None) => Ok(vs.clone()),
                    (None, Some(csv_path)) => self.csv_column(name, csv_path, def.column.as_deref()),
                    _ => Err(ScenarioError::Parse {
                        path: self.path.clone(),
                        section: format!(", section [profiles.{name}]"),
                        message: "profile needs exactly one of `values` or `csv`".into(),
                    }),
                }
            }
        }
    }

    fn csv_column(
        &self,
        name: &str,
        csv_path: &str,
        column: Option<&str>,
    ) -> Result<Vec<f64>, ScenarioError> {
        let full = self.base_dir.join(csv_path);
        if !full.exists() {
            return Err(ScenarioError::MissingProfile {
                name: name.to_string(),
                path: full.display().to_string(),
            });
        }
        let mut reader = csv::Reader::from_path(&full)?;
        let headers = reader.headers()?.clone();
        let idx = match column {
            Some(col) => headers.iter().position(|h| h == col).ok_or_else(|| {
                ScenarioError::MissingColumn {
                    name: name.to_string(),
                    column: col.to_string(),
                    path: full.display().to_string(),
                }
            })?,
            None => 0,
        };
        let mut values = Vec::new();
        for record in reader.records() {
            let record = record?;
            let raw = record.get(idx).unwrap_or("");
            values.push(raw.trim().parse::<f64>().map_err(|e| ScenarioError::Parse {
                path: full.display().to_string(),
                section: String::new(),
                message: format!("bad number {raw:?} in column {idx}: {e}"),
            })?);
        }
        Ok(values)
    }
}

/// Parse a scenario document into a validated system.
pub fn load_scenario<S: Real>(path: &Path) -> Result<EnergySystem<S>, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    scenario_from_str(&text, &path.display().to_string(), &base_dir)
}

/// Parse scenario text; `base_dir` anchors CSV references.
pub fn scenario_from_str<S: Real>(
    text: &str,
    path: &str,
    base_dir: &Path,
) -> Result<EnergySystem<S>, ScenarioError> {
    let doc: ScenarioDoc = toml::from_str(text).map_err(|e| ScenarioError::Parse {
        path: path.to_string(),
        section: String::new(),
        message: e.to_string(),
    })?;
    let resolver = Resolver {
        path: path.to_string(),
        base_dir: base_dir.to_path_buf(),
        profiles: &doc.profiles,
        steps: doc.horizon.steps,
    };

    let mut processes = Vec::new();
    for p in &doc.processes {
        let kind: ProcessKind<S> = match p.kind.as_str() {
            "standard" => ProcessKind::Standard,
            "import" => ProcessKind::Import,
            "demand" => ProcessKind::Demand,
            "storage" => {
                let sd = p.storage.as_ref().ok_or_else(|| ScenarioError::Parse {
                    path: path.to_string(),
                    section: format!(", process {}", p.id),
                    message: "storage process needs a [processes.storage] table".into(),
                })?;
                ProcessKind::Storage(StorageParams {
                    charge_efficiency: real(sd.charge_efficiency),
                    self_discharge_per_hour: real(sd.self_discharge_per_hour),
                    energy_capacity_gwh: real(sd.energy_capacity_gwh),
                    initial_level_gwh: real(sd.initial_level_gwh),
                    initial_co2_t: real(sd.initial_co2_t),
                })
            }
            other => {
                return Err(ScenarioError::Parse {
                    path: path.to_string(),
                    section: format!(", process {}", p.id),
                    message: format!("unknown kind {other:?} (use standard|import|demand|storage)"),
                })
            }
        };
        if p.storage.is_some() && p.kind != "storage" {
            return Err(ScenarioError::Parse {
                path: path.to_string(),
                section: format!(", process {}", p.id),
                message: "only storage processes may carry storage parameters".into(),
            });
        }
        let mut process = Process { id: p.id.clone(), kind, inputs: p.inputs.clone(), outputs: Vec::new() };
        for o in &p.outputs {
            let conversion = match (o.efficiency, o.efficiency_min, o.efficiency_max) {
                (Some(k), None, None) => Some(Conversion::Fixed(real(k))),
                (None, Some(lo), Some(hi)) => Some(Conversion::Flexible {
                    min: real(lo),
                    max: real(hi),
                }),
                (None, None, None) => None,
                _ => {
                    return Err(ScenarioError::Parse {
                        path: path.to_string(),
                        section: format!(", process {}", p.id),
                        message: format!(
                            "output {}: give either `efficiency` or both `efficiency_min`/`efficiency_max`",
                            o.commodity
                        ),
                    })
                }
            };
            let availability = match &o.availability {
                None => Profile::full(),
                Some(SeriesRef::Constant(v)) => Profile::Constant(real(*v)),
                Some(r) => Profile::Series(resolver.series(r)?.into_iter().map(real).collect()),
            };
            process.outputs.push(Output {
                commodity: o.commodity.clone(),
                conversion,
                capacity_gw: o.capacity_gw.map(real),
                cost_per_mwh: real(o.cost_per_mwh),
                co2_t_per_mwh: real(o.co2_t_per_mwh),
                availability,
            });
        }
        processes.push(process);
    }

    let mut demands = BTreeMap::new();
    for (proc_id, series_ref) in &doc.demands {
        let series = resolver.series(series_ref)?;
        demands.insert(proc_id.clone(), series.into_iter().map(real).collect());
    }

    let system = EnergySystem {
        commodities: doc
            .commodities
            .iter()
            .map(|c| Commodity::new(&c.id, &c.name))
            .collect(),
        processes,
        steps: doc.horizon.steps,
        step_hours: real(doc.horizon.step_hours),
        demands,
    };

    let report = validate(&system);
    if !report.is_empty() {
        return Err(ScenarioError::Validation(report));
    }
    Ok(system)
}

/// Serialize a system to scenario text (profiles written inline).
pub fn scenario_to_string<S: Real>(system: &EnergySystem<S>) -> String {
    let doc = ScenarioDoc {
        horizon: HorizonDoc {
            steps: system.steps,
            step_hours: to_f64(system.step_hours),
        },
        commodities: system
            .commodities
            .iter()
            .map(|c| CommodityDoc {
                id: c.id.clone(),
                name: c.name.clone(),
            })
            .collect(),
        processes: system
            .processes
            .iter()
            .map(|p| ProcessDoc {
                id: p.id.clone(),
                kind: p.kind.label().to_string(),
                inputs: p.inputs.clone(),
                outputs: p
                    .outputs
                    .iter()
                    .map(|o| {
                        let (efficiency, lo, hi) = match o.conversion {
                            Some(Conversion::Fixed(k)) => (Some(to_f64(k)), None, None),
                            Some(Conversion::Flexible { min, max }) => {
                                (None, Some(to_f64(min)), Some(to_f64(max)))
                            }
                            None => (None, None, None),
                        };
                        OutputDoc {
                            commodity: o.commodity.clone(),
                            efficiency,
                            efficiency_min: lo,
                            efficiency_max: hi,
                            capacity_gw: o.capacity_gw.map(to_f64),
                            cost_per_mwh: to_f64(o.cost_per_mwh),
                            co2_t_per_mwh: to_f64(o.co2_t_per_mwh),
                            availability: match &o.availability {
                                Profile::Constant(v) if *v == S::one() => None,
                                Profile::Constant(v) => Some(SeriesRef::Constant(to_f64(*v))),
                                Profile::Series(vs) => {
                                    Some(SeriesRef::Inline(vs.iter().map(|&v| to_f64(v)).collect()))
                                }
                            },
                        }
                    })
                    .collect(),
                storage: p.storage_params().map(|s| StorageDoc {
                    charge_efficiency: to_f64(s.charge_efficiency),
                    self_discharge_per_hour: to_f64(s.self_discharge_per_hour),
                    energy_capacity_gwh: to_f64(s.energy_capacity_gwh),
                    initial_level_gwh: to_f64(s.initial_level_gwh),
                    initial_co2_t: to_f64(s.initial_co2_t),
                }),
            })
            .collect(),
        profiles: BTreeMap::new(),
        demands: system
            .demands
            .iter()
            .map(|(k, v)| (k.clone(), SeriesRef::Inline(v.iter().map(|&d| to_f64(d)).collect())))
            .collect(),
    };
    toml::to_string_pretty(&doc).expect("scenario docs serialize")
}

/// Write a system to a scenario file.
pub fn save_scenario<S: Real>(system: &EnergySystem<S>, path: &Path) -> Result<(), ScenarioError> {
    std::fs::write(path, scenario_to_string(system)).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factory::{make_builtin, BUILTIN_NAMES};

    #[test]
    fn save_load_round_trip_is_identity() {
        for name in BUILTIN_NAMES {
            let sys: EnergySystem<f64> = make_builtin(name).unwrap();
            let text = scenario_to_string(&sys);
            let back: EnergySystem<f64> =
                scenario_from_str(&text, "inline", Path::new(".")).unwrap();
            assert_eq!(sys, back, "{name} round trip changed the system");
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let sys: EnergySystem<f64> = make_builtin("sc1").unwrap();
        let mut text = scenario_to_string(&sys);
        text.push_str("\n[extra_section]\nfoo = 1\n");
        let err = scenario_from_str::<f64>(&text, "inline", Path::new(".")).unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { .. }), "{err}");
    }

    #[test]
    fn negative_efficiency_fails_validation() {
        let text = r#"
[horizon]
steps = 1
step_hours = 1.0

[[commodities]]
id = "a"
name = "A"
[[commodities]]
id = "b"
name = "B"

[[processes]]
id = "imp"
kind = "import"
[[processes.outputs]]
commodity = "a"

[[processes]]
id = "conv"
kind = "standard"
inputs = ["a"]
[[processes.outputs]]
commodity = "b"
efficiency = -0.5

[[processes]]
id = "load"
kind = "demand"
inputs = ["b"]

[demands]
load = [1.0]
"#;
        let err = scenario_from_str::<f64>(text, "inline", Path::new(".")).unwrap_err();
        match err {
            ScenarioError::Validation(report) => {
                assert!(report.findings.iter().any(|f| f.message.contains("must be > 0")));
            }
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn missing_profile_csv_is_named() {
        let text = r#"
[horizon]
steps = 2
step_hours = 1.0

[[commodities]]
id = "a"
name = "A"

[[processes]]
id = "imp"
kind = "import"
[[processes.outputs]]
commodity = "a"
availability = "sun"

[[processes]]
id = "load"
kind = "demand"
inputs = ["a"]

[profiles.sun]
csv = "does_not_exist.csv"
column = "availability"

[demands]
load = [1.0, 1.0]
"#;
        let err = scenario_from_str::<f64>(text, "inline", Path::new("/tmp")).unwrap_err();
        match err {
            ScenarioError::MissingProfile { name, path } => {
                assert_eq!(name, "sun");
                assert!(path.contains("does_not_exist.csv"));
            }
            other => panic!("expected missing profile, got {other}"),
        }
    }

    #[test]
    fn csv_profile_loads_by_column() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("sun.csv"),
            "step,availability\n0,0.25\n1,0.75\n",
        )
        .unwrap();
        let text = r#"
[horizon]
steps = 2
step_hours = 1.0

[[commodities]]
id = "a"
name = "A"

[[processes]]
id = "imp"
kind = "import"
[[processes.outputs]]
commodity = "a"
capacity_gw = 1.0
availability = "sun"

[[processes]]
id = "load"
kind = "demand"
inputs = ["a"]

[profiles.sun]
csv = "sun.csv"
column = "availability"

[demands]
load = [0.1, 0.2]
"#;
        let sys: EnergySystem<f64> = scenario_from_str(text, "inline", dir.path()).unwrap();
        match &sys.processes[0].outputs[0].availability {
            Profile::Series(vs) => assert_eq!(vs, &vec![0.25, 0.75]),
            other => panic!("expected series, got {other:?}"),
        }
    }
}
