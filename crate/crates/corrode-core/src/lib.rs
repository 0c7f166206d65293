//! Corruption-lifetime modeling for eventually-consistent distributed graph
//! databases.
//!
//! A graph edge whose two end records live on different replica sets can drift
//! through four states: clean-local (0), clean-distributed (1), reciprocally
//! inconsistent (2, mechanical corruption), and semantically corrupt (3,
//! absorbing). Two engines compute `U_γ`, the time until a fraction `γ` of all
//! edges is semantically corrupt:
//!
//! - [`solver`]: a deterministic fluid solver that integrates the mean-field
//!   transition rates in closed form over adaptive segments, with a
//!   time-averaged fixed-point pass as its first refinement level.
//! - [`sim`]: a discrete-event simulator of the full stochastic system —
//!   Poisson query arrivals, geometric read counts, exponentially distributed
//!   distributed-write latencies, and explicit write-conflict detection.
//!
//! [`model`] holds the shared state machine and probability formulas,
//! [`config`] the validated experiment configuration schema, and [`harness`]
//! the orchestration layer (sweeps, cross-engine validation, topology
//! comparison, CSV/JSON emission).

pub mod config;
pub mod harness;
pub mod model;
pub mod sim;
pub mod solver;

use thiserror::Error;

/// Unified error type for configuration, validation, and I/O failures.
///
/// Solver non-convergence is not an error: [`solver::SolveResult::converged`]
/// reports it so callers can inspect the iteration log.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration field failed validation; names the offending field.
    #[error("invalid config: field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },
    /// An operation received an argument outside its domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// An experiment could not produce a usable estimate.
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Seconds in a 30-day month, the unit used for long-horizon reporting.
pub const SECONDS_PER_MONTH: f64 = 30.0 * 86400.0;
