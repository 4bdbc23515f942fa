//! Error type shared by all solver and study modules.

use std::fmt;

/// Everything that can go wrong while building problems, validating
/// parameters, or running solves and studies.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Grid construction parameters violate the geometry preconditions.
    InvalidGeometry(String),
    /// Per-edge values disagree at the junction beyond the gluing tolerance.
    JunctionMismatch { edge: usize, difference: f64 },
    /// A difference quotient was requested at a node where it is undefined.
    IndexError(String),
    /// No finite coercivity radius exists below the search cap.
    NotCoercive { level: f64 },
    /// Scheme constants are mutually inconsistent (cap below M, radius too small, ...).
    InvalidConstants(String),
    /// A CFL inequality failed; `inequality` quotes the failing condition.
    CflViolation { inequality: String, detail: String },
    /// The scalar node equation had no sign change even after bracket expansion.
    BracketFailure {
        edge: usize,
        node: usize,
        lo: f64,
        hi: f64,
    },
    /// Gauss-Seidel iteration did not reach the tolerance within the sweep budget.
    NoConvergence { sweeps: u64, last_update: f64 },
    /// Two grid functions live on incompatible grids.
    ShapeMismatch(String),
    /// Manufactured-solution coefficients do not satisfy the flux constraint.
    InvalidCoefficients(String),
    /// A study error is exactly zero, so a log-log fit is meaningless.
    DegenerateFit,
    /// A study would allocate more grid nodes than the configured budget.
    ResourceGuard { nodes: u64, budget: u64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGeometry(msg) => write!(f, "invalid network geometry: {msg}"),
            Error::JunctionMismatch { edge, difference } => write!(
                f,
                "junction values disagree (edge {edge} differs by {difference:e})"
            ),
            Error::IndexError(msg) => write!(f, "difference quotient undefined: {msg}"),
            Error::NotCoercive { level } => write!(
                f,
                "no coercivity radius below 1e6 for level {level}; Hamiltonian appears bounded"
            ),
            Error::InvalidConstants(msg) => write!(f, "inconsistent scheme constants: {msg}"),
            Error::CflViolation { inequality, detail } => {
                write!(f, "CFL condition violated: {inequality} fails ({detail})")
            }
            Error::BracketFailure { edge, node, lo, hi } => write!(
                f,
                "no sign change on [{lo}, {hi}] at node ({edge}, {node}); \
                 check CFL parameters and the Hamiltonian cap"
            ),
            Error::NoConvergence {
                sweeps,
                last_update,
            } => write!(
                f,
                "no convergence after {sweeps} sweeps (last update {last_update:e})"
            ),
            Error::ShapeMismatch(msg) => write!(f, "incompatible grid shapes: {msg}"),
            Error::InvalidCoefficients(msg) => write!(f, "invalid coefficients: {msg}"),
            Error::DegenerateFit => {
                write!(f, "error at machine precision; log-log fit is degenerate")
            }
            Error::ResourceGuard { nodes, budget } => write!(
                f,
                "study would allocate {nodes} nodes, exceeding the budget of {budget}"
            ),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
