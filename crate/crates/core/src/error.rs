//! One error type for the whole crate.
//!
//! Everything fallible returns [`Result`]. Variants are grouped by the stage
//! that produces them: input validation, solver infeasibility, and the
//! enumeration caps that keep exact computations from blowing up.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An index addressed something outside its container.
    #[error("{what} index {got} out of range (size {size})")]
    IndexOutOfRange {
        what: &'static str,
        got: usize,
        size: usize,
    },

    /// An operation that needs at least one element got none.
    #[error("{0} must be non-empty")]
    Empty(&'static str),

    /// Two collections that must agree in length do not.
    #[error("{what}: length {left} does not match {right}")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    /// A sample is inconsistent with every hypothesis in the class.
    #[error("sample is not realizable by the class: {0}")]
    Unrealizable(String),

    /// Max-margin separation was requested for a sample that no halfspace
    /// separates (e.g. the same point appears with both labels).
    #[error("sample is not linearly separable: {0}")]
    NotSeparable(String),

    /// An exact enumeration would exceed its hard cap.
    #[error("{what} requires {needed} states, above the cap of {cap}")]
    CapExceeded {
        what: &'static str,
        needed: u128,
        cap: u128,
    },

    /// A probability weight or atom list failed validation.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// A hypothesis-class description failed validation.
    #[error("invalid class: {0}")]
    InvalidClass(String),

    /// A numeric argument is outside the range an operation supports.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// No orientation with the requested out-degree bound exists; the fields
    /// name a witness subgraph that is too dense.
    #[error(
        "no orientation with out-degree <= {bound}: \
         witness subgraph has {edges} edges on {vertices} vertices"
    )]
    OrientationInfeasible {
        bound: usize,
        edges: usize,
        vertices: usize,
    },

    /// Experiment configuration is malformed (maps to exit code 2 in the CLI).
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
