//! Error types for the individual layers of the crate.

use thiserror::Error;

use crate::model::ValidationReport;

/// Errors from model construction.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown scenario index {0} (valid: {1})")]
    InvalidScenario(u8, &'static str),
    #[error("system failed validation:\n{0}")]
    Invalid(ValidationReport),
}

/// Errors from the LP layer.
#[derive(Debug, Error)]
pub enum LpError {
    #[error("simplex did not converge within {iterations} iterations")]
    NumericalFailure { iterations: usize },
    #[error("basis matrix is singular at pivot column {col}")]
    SingularBasis { col: usize },
}

/// Errors from dispatch optimization.
#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("dispatch is infeasible: demand cannot be met from the available processes")]
    InfeasibleSystem,
    #[error("dispatch model is unbounded; check costs and process definitions")]
    UnboundedModel,
    #[error("system failed validation:\n{0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Errors from the flow-tracing linear system.
#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace system is singular at column {col}; this indicates an assembly bug")]
    SingularTraceSystem { col: usize },
}

/// Errors from marginal-intensity computation.
#[derive(Debug, Error)]
pub enum WhatIfError {
    #[error("perturbing demand of {commodity} at step {step} by {eps} makes dispatch infeasible")]
    InfeasiblePerturbation {
        commodity: String,
        step: usize,
        eps: f64,
    },
    #[error("commodity {0} has no demand process")]
    NoDemand(String),
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Errors from scenario files and result output.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}{section}: {message}")]
    Parse {
        path: String,
        /// Formatted as ", section [x]" when known.
        section: String,
        message: String,
    },
    #[error("profile {name} references missing CSV file {path}")]
    MissingProfile { name: String, path: String },
    #[error("profile {name} has no column {column} in {path}")]
    MissingColumn {
        name: String,
        column: String,
        path: String,
    },
    #[error("scenario does not validate:\n{0}")]
    Validation(ValidationReport),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}
