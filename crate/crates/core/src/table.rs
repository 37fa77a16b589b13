//! Long-format result table and its CSV round trip.

use std::fmt;
use std::io;
use std::path::Path;
use std::str::FromStr;

use crate::asis::AsIsResult;
use crate::dispatch::DispatchResult;
use crate::model::EnergySystem;
use crate::scalar::{to_f64, Real};
use crate::whatif::WhatIfResult;

/// Quality flag of a table row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flag {
    Ok,
    /// Value came from a pinned near-zero denominator.
    Thresholded,
    /// One-sided derivative at a degenerate optimum.
    Degenerate,
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Flag::Ok => "ok",
            Flag::Thresholded => "thresholded",
            Flag::Degenerate => "degenerate",
        };
        f.write_str(s)
    }
}

impl FromStr for Flag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ok" => Ok(Flag::Ok),
            "thresholded" => Ok(Flag::Thresholded),
            "degenerate" => Ok(Flag::Degenerate),
            other => Err(format!("unknown flag {other}")),
        }
    }
}

/// One observation: a named series at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub scenario: String,
    pub series: String,
    pub step: usize,
    pub value: f64,
    pub unit: String,
    pub flag: Flag,
}

/// Plot-ready long-format table, one row per `(series, step)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<TableRow>,
}

impl ResultTable {
    pub fn push(&mut self, scenario: &str, series: String, step: usize, value: f64, unit: &str, flag: Flag) {
        self.rows.push(TableRow {
            scenario: scenario.to_string(),
            series,
            step,
            value,
            unit: unit.to_string(),
            flag,
        });
    }

    /// All values of one series ordered by step.
    pub fn series(&self, name: &str) -> Vec<f64> {
        let mut rows: Vec<&TableRow> = self.rows.iter().filter(|r| r.series == name).collect();
        rows.sort_by_key(|r| r.step);
        rows.iter().map(|r| r.value).collect()
    }

    pub fn write_csv<W: io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["scenario", "series", "step", "value", "unit", "flag"])?;
        for r in &self.rows {
            w.write_record([
                r.scenario.as_str(),
                r.series.as_str(),
                &r.step.to_string(),
                &format!("{}", r.value),
                r.unit.as_str(),
                &r.flag.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> csv::Result<()> {
        let file = std::fs::File::create(path).map_err(csv::Error::from)?;
        self.write_csv(io::BufWriter::new(file))
    }

    pub fn read_csv<R: io::Read>(reader: R) -> csv::Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record?;
            rows.push(TableRow {
                scenario: record[0].to_string(),
                series: record[1].to_string(),
                step: record[2].parse().unwrap_or(0),
                value: record[3].parse().unwrap_or(f64::NAN),
                unit: record[4].to_string(),
                flag: record[5].parse().unwrap_or(Flag::Ok),
            });
        }
        Ok(ResultTable { rows })
    }
}

/// Assemble the full table for one scenario run. Any of the analysis results
/// may be absent depending on the requested method.
pub fn build_table<S: Real>(
    scenario: &str,
    system: &EnergySystem<S>,
    dispatch: &DispatchResult<S>,
    asis: Option<&AsIsResult<S>>,
    whatif: Option<&WhatIfResult<S>>,
) -> ResultTable {
    let mut table = ResultTable::default();
    let layout = &dispatch.layout;

    for (k, f) in layout.out_flows.iter().enumerate() {
        let name = format!(
            "generation/{}/{}",
            system.processes[f.process].id, system.commodities[f.commodity].id
        );
        for t in 0..system.steps {
            table.push(scenario, name.clone(), t, to_f64(dispatch.e_out[k][t]), "GWh", Flag::Ok);
        }
    }
    for (k, f) in layout.in_flows.iter().enumerate() {
        let name = format!(
            "consumption/{}/{}",
            system.processes[f.process].id, system.commodities[f.commodity].id
        );
        for t in 0..system.steps {
            table.push(scenario, name.clone(), t, to_f64(dispatch.e_in[k][t]), "GWh", Flag::Ok);
        }
    }
    for (k, &p) in layout.storages.iter().enumerate() {
        let name = format!("storage_level/{}", system.processes[p].id);
        for t in 0..system.steps {
            table.push(scenario, name.clone(), t, to_f64(dispatch.levels[k][t]), "GWh", Flag::Ok);
        }
    }

    if let Some(asis) = asis {
        for (ci, c) in system.commodities.iter().enumerate() {
            let name = format!("intensity_asis/{}", c.id);
            for t in 0..system.steps {
                let flag = if asis.is_flagged_commodity(ci, t) {
                    Flag::Thresholded
                } else {
                    Flag::Ok
                };
                table.push(scenario, name.clone(), t, to_f64(asis.intensity[ci][t]), "t/MWh", flag);
            }
        }
        for (k, &p) in layout.storages.iter().enumerate() {
            let name = format!("intensity_storage/{}", system.processes[p].id);
            for t in 0..system.steps {
                let flag = if asis.is_flagged_storage(p, t) {
                    Flag::Thresholded
                } else {
                    Flag::Ok
                };
                table.push(
                    scenario,
                    name.clone(),
                    t,
                    to_f64(asis.storage_intensity[k][t]),
                    "t/MWh",
                    flag,
                );
            }
        }
    }

    if let Some(whatif) = whatif {
        for &ci in &whatif.commodities {
            let name = format!("intensity_whatif/{}", system.commodities[ci].id);
            for t in 0..system.steps {
                let flag = if whatif.is_degenerate(ci, t) {
                    Flag::Degenerate
                } else {
                    Flag::Ok
                };
                table.push(scenario, name.clone(), t, to_f64(whatif.value_at(ci, t)), "t/MWh", flag);
            }
        }
        if !whatif.fd_value.is_empty() {
            for &ci in &whatif.commodities {
                let name = format!("intensity_whatif_fd/{}", system.commodities[ci].id);
                let delta_name = format!("whatif_fd_delta/{}", system.commodities[ci].id);
                for t in 0..system.steps {
                    if let Some(fd) = whatif.fd_value.get(&(ci, t)) {
                        table.push(scenario, name.clone(), t, to_f64(*fd), "t/MWh", Flag::Ok);
                        let delta = to_f64(whatif.value_at(ci, t)) - to_f64(*fd);
                        table.push(scenario, delta_name.clone(), t, delta, "t/MWh", Flag::Ok);
                    }
                }
            }
        }
    }

    table
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_identity() {
        let mut table = ResultTable::default();
        table.push("sc1", "generation/spp/electricity".into(), 0, 0.123456789012345, "GWh", Flag::Ok);
        table.push("sc1", "intensity_asis/electricity".into(), 1, 0.41 / 0.45, "t/MWh", Flag::Thresholded);
        table.push("sc1", "weird, series \"quoted\"".into(), 2, -1.5e-9, "t/MWh", Flag::Degenerate);
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let parsed = ResultTable::read_csv(buf.as_slice()).unwrap();
        assert_eq!(parsed, table);
    }
}
