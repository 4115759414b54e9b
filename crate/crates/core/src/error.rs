//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input violates a domain bound; the message names the bound.
    #[error("{0}")]
    Domain(String),

    /// The geometry factors are undefined at `theta1 = 0`; callers must route
    /// that case to the all-linear branch.
    #[error("geometry factors are undefined at theta1 = 0 (all-linear limit)")]
    DegenerateGeometry,

    /// The root solver exhausted its iteration budget.
    #[error(
        "root solve did not converge after {iterations} iterations \
         (bracket [{bracket_lo}, {bracket_hi}], residual {residual:e})"
    )]
    Convergence {
        iterations: usize,
        bracket_lo: f64,
        bracket_hi: f64,
        residual: f64,
    },

    /// A constructed solution violated its own transmission conditions.
    /// Signals a solver bug, not bad user input.
    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    /// A finite-difference step leaves the valid parameter domain.
    #[error("finite-difference step {step} leaves the valid domain: {reason}")]
    Step { step: f64, reason: String },

    /// Mismatched matrix shape.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A table cell could not be computed.
    #[error("table cell (theta1={theta1}, p={p}) failed")]
    Cell {
        theta1: f64,
        p: f64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
