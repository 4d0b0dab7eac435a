use thiserror::Error;

use crate::landscape::StateId;

/// Errors raised by landscape construction and analysis.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("landscape has no states")]
    EmptyInput,
    #[error("edge {edge} is a self loop on state {state}")]
    SelfLoop { edge: usize, state: usize },
    #[error("edge {edge} references state {state}, but only {n_states} states exist")]
    InvalidEdge {
        edge: usize,
        state: usize,
        n_states: usize,
    },
    #[error("state graph is disconnected ({components} components)")]
    DisconnectedGraph { components: usize },
    #[error("landscape has {n_states} states, above the cap of {cap}")]
    TooManyStates { n_states: usize, cap: usize },
    #[error("state set is empty")]
    EmptySet,
    #[error("state set covers the whole landscape")]
    FullSet,
    #[error("state sets overlap")]
    Overlap,
    #[error("state {0} does not exist")]
    UnknownState(StateId),
    #[error("given ground set is not the set of energy minimizers")]
    GroundMismatch,
    #[error("landscape has a single stable plateau; at least two are required")]
    SingleGround,
    #[error("source state {0} violates the energy cap")]
    CapExcludesSource(StateId),
    #[error("set is not connected")]
    NotConnected,
    #[error("set is not a cycle: interior maximum {interior_max} >= boundary minimum {boundary_min}")]
    NotACycle { interior_max: i64, boundary_min: i64 },
    #[error("cycles overlap or touch")]
    OverlappingCycles,
    #[error("node {0} of the induced chain cannot reach the target plateaux")]
    UnreachableTarget(usize),
    #[error("linear system is singular")]
    SingularSystem,
    #[error("hierarchy already terminal")]
    TerminalReached,
    #[error("classification violated at level {level} for plateau {plateau}: {reason}")]
    ClassificationViolation {
        level: usize,
        plateau: usize,
        reason: String,
    },
    #[error("invariant violated at level {level}: {detail}")]
    InvariantViolation { level: usize, detail: String },
    #[error("configuration has {found} particles, expected {expected}")]
    WrongParticleCount { found: u32, expected: u32 },
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("enumeration exceeded the cap of {cap} states")]
    CapExceeded { cap: usize },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
