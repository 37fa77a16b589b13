//! One-shot scenario runs: dispatch, analyses, CSV table and JSON manifest.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::asis::{compute_asis, AsIsResult, EPSILON_GWH};
use crate::dispatch::{solve_dispatch_with, DispatchResult};
use crate::error::{DispatchError, ModelError, ScenarioError, TraceError, WhatIfError};
use crate::factory::make_builtin;
use crate::lp::SolverOptions;
use crate::model::EnergySystem;
use crate::scalar::to_f64;
use crate::scenario::load_scenario;
use crate::stats;
use crate::table::{build_table, ResultTable};
use crate::whatif::{compute_whatif, compute_whatif_checked, FdCheckOptions, WhatIfResult};

/// Where the system comes from.
#[derive(Debug, Clone)]
pub enum ScenarioSource {
    /// One of the built-in systems: sc1, sc2, mc1, mc2, mc3.
    Builtin(String),
    /// A scenario file.
    File(PathBuf),
}

impl ScenarioSource {
    pub fn label(&self) -> String {
        match self {
            ScenarioSource::Builtin(name) => name.clone(),
            ScenarioSource::File(path) => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
        }
    }
}

/// Which analyses to run after dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisMethod {
    AsIs,
    WhatIf,
    Both,
}

impl AnalysisMethod {
    fn wants_asis(self) -> bool {
        matches!(self, AnalysisMethod::AsIs | AnalysisMethod::Both)
    }

    fn wants_whatif(self) -> bool {
        matches!(self, AnalysisMethod::WhatIf | AnalysisMethod::Both)
    }

    pub fn label(self) -> &'static str {
        match self {
            AnalysisMethod::AsIs => "asis",
            AnalysisMethod::WhatIf => "whatif",
            AnalysisMethod::Both => "both",
        }
    }
}

impl FromStr for AnalysisMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "asis" => Ok(AnalysisMethod::AsIs),
            "whatif" => Ok(AnalysisMethod::WhatIf),
            "both" => Ok(AnalysisMethod::Both),
            other => Err(format!("unknown method {other} (use asis|whatif|both)")),
        }
    }
}

/// Full configuration of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: ScenarioSource,
    pub method: AnalysisMethod,
    pub out_dir: PathBuf,
    /// Verify what-if values against the finite-difference oracle.
    pub fd_check: bool,
    /// Subsample the oracle to roughly this many entries.
    pub fd_sample: Option<usize>,
    /// Override the solver feasibility/duality tolerance.
    pub tol: Option<f64>,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    WhatIf(#[from] WhatIfError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

/// Machine-readable record of a run: parameters, tolerances, solver effort
/// and the key residuals. Deterministic for fixed inputs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub scenario: String,
    pub method: String,
    pub steps: usize,
    pub step_hours: f64,
    pub tolerances: ManifestTolerances,
    pub solver: ManifestSolver,
    pub results: ManifestResults,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestTolerances {
    pub feasibility: f64,
    pub duality: f64,
    pub active_set: f64,
    pub trace_epsilon_gwh: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd_step_gwh: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestSolver {
    pub iterations: usize,
    pub lp_solves: u64,
    pub basis_factorizations: u64,
    pub cost_perturbation_scale: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestResults {
    pub cost: f64,
    pub total_co2_t: f64,
    pub primal_feasibility: f64,
    pub duality_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_residual: Option<f64>,
    /// Global CO₂ conservation residual of the as-is trace, relative.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub co2_conservation_rel: Option<f64>,
    pub thresholded_entries: usize,
    pub degenerate_entries: usize,
}

/// Everything a run produced.
#[derive(Debug)]
pub struct RunOutput {
    pub system: EnergySystem<f64>,
    pub dispatch: DispatchResult<f64>,
    pub asis: Option<AsIsResult<f64>>,
    pub whatif: Option<WhatIfResult<f64>>,
    pub table: ResultTable,
    pub manifest: Manifest,
    pub results_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Execute a run end to end and write `results.csv` and `manifest.json`.
pub fn run(config: &RunConfig) -> Result<RunOutput, RunError> {
    stats::reset();
    let system: EnergySystem<f64> = match &config.source {
        ScenarioSource::Builtin(name) => make_builtin(name)?,
        ScenarioSource::File(path) => load_scenario(path)?,
    };

    let mut opts = SolverOptions::<f64>::default();
    if let Some(tol) = config.tol {
        opts = opts.with_tolerance(tol);
    }
    let dispatch = solve_dispatch_with(&system, &opts)?;

    let asis = if config.method.wants_asis() {
        Some(compute_asis(&system, &dispatch)?)
    } else {
        None
    };
    let whatif = if config.method.wants_whatif() {
        let res = if config.fd_check {
            compute_whatif_checked(
                &system,
                &dispatch,
                &FdCheckOptions {
                    sample: config.fd_sample,
                    eps_gwh: None,
                },
            )?
        } else {
            compute_whatif(&system, &dispatch)?
        };
        Some(res)
    } else {
        None
    };

    let label = config.source.label();
    let table = build_table(&label, &system, &dispatch, asis.as_ref(), whatif.as_ref());

    let counters = stats::counters();
    let duality_gap = {
        let btl: f64 = dispatch
            .lp
            .rhs
            .iter()
            .zip(&dispatch.sol.duals)
            .map(|(&b, &l)| b * l)
            .sum();
        (dispatch.sol.objective + btl).abs()
    };
    let manifest = Manifest {
        scenario: label,
        method: config.method.label().to_string(),
        steps: system.steps,
        step_hours: system.step_hours,
        tolerances: ManifestTolerances {
            feasibility: opts.tol_feas,
            duality: opts.tol_dual,
            active_set: opts.tol_active,
            trace_epsilon_gwh: EPSILON_GWH,
            fd_step_gwh: whatif.as_ref().map(|w| to_f64(w.fd_step_gwh)),
        },
        solver: ManifestSolver {
            iterations: dispatch.sol.iterations,
            lp_solves: counters.lp_solves,
            basis_factorizations: counters.basis_factorizations,
            cost_perturbation_scale: dispatch.cost_perturbation_scale,
        },
        results: ManifestResults {
            cost: dispatch.cost,
            total_co2_t: dispatch.m_tot_t,
            primal_feasibility: dispatch.lp.feasibility_error(&dispatch.sol.x),
            duality_gap,
            trace_residual: asis.as_ref().map(|a| a.residual),
            co2_conservation_rel: asis.as_ref().map(|a| a.conservation.rel_residual),
            thresholded_entries: asis.as_ref().map(|a| a.thresholded.len()).unwrap_or(0),
            degenerate_entries: whatif.as_ref().map(|w| w.degenerate.len()).unwrap_or(0),
        },
    };

    std::fs::create_dir_all(&config.out_dir).map_err(|source| RunError::Io {
        path: config.out_dir.display().to_string(),
        source,
    })?;
    let results_path = config.out_dir.join("results.csv");
    table.write_csv_file(&results_path)?;
    let manifest_path = config.out_dir.join("manifest.json");
    let manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, manifest_json).map_err(|source| RunError::Io {
        path: manifest_path.display().to_string(),
        source,
    })?;

    Ok(RunOutput {
        system,
        dispatch,
        asis,
        whatif,
        table,
        manifest,
        results_path,
        manifest_path,
    })
}

/// Convenience for tests and the CLI: run a builtin into a directory.
pub fn run_builtin(name: &str, method: AnalysisMethod, out_dir: &Path) -> Result<RunOutput, RunError> {
    run(&RunConfig {
        source: ScenarioSource::Builtin(name.to_string()),
        method,
        out_dir: out_dir.to_path_buf(),
        fd_check: false,
        fd_sample: None,
        tol: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_writes_table_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_builtin("sc1", AnalysisMethod::Both, dir.path()).unwrap();
        assert!(out.results_path.exists());
        assert!(out.manifest_path.exists());
        // table re-parses to the same content
        let text = std::fs::read(&out.results_path).unwrap();
        let parsed = ResultTable::read_csv(text.as_slice()).unwrap();
        assert_eq!(parsed, out.table);
        // manifest carries the trace conservation residual
        let asis = out.asis.as_ref().unwrap();
        assert_eq!(
            out.manifest.results.co2_conservation_rel.unwrap(),
            asis.conservation.rel_residual
        );
        // 24 intensity rows per analysis series
        assert_eq!(out.table.series("intensity_asis/electricity").len(), 24);
        assert_eq!(out.table.series("intensity_whatif/electricity").len(), 24);
    }

    #[test]
    fn deterministic_outputs() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let a = run_builtin("mc1", AnalysisMethod::Both, dir_a.path()).unwrap();
        let b = run_builtin("mc1", AnalysisMethod::Both, dir_b.path()).unwrap();
        assert_eq!(a.table, b.table);
        assert_eq!(
            std::fs::read(&a.manifest_path).unwrap(),
            std::fs::read(&b.manifest_path).unwrap()
        );
    }
}
