use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::bracket::ValidityReport;

/// Error type shared by every module in the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two factors (or a factor and a network) disagree on a variable's
    /// definition: same name, different state domains.
    DomainMismatch { variable: String },
    /// A variable name does not resolve in the current scope.
    UnknownVariable { variable: String },
    /// A state name does not belong to its variable's domain.
    UnknownState { variable: String, state: String },
    /// The same variable was declared or bound twice.
    DuplicateVariable { variable: String },
    /// A factor or function table is malformed (wrong length, negative
    /// cell, empty domain, non-total function table, ...).
    Invalid { reason: String },
    /// Normalization of a factor with zero total mass.
    ZeroMass,
    /// The conditioning event has probability zero.
    ImpossibleEvidence,
    /// The parent graph contains a directed cycle.
    Cycle { nodes: Vec<String> },
    /// An elimination or chain-rule order is not a permutation of the nodes.
    NotAPermutation,
    /// An intermediate table would exceed the cell cap.
    ResourceCap { cells: usize, cap: usize },
    /// Query text failed to parse; `offset` is a byte position.
    Parse { offset: usize, message: String },
    /// A bracket expression was rejected by the well-formedness rules.
    InvalidBracket(ValidityReport),
    /// The network failed structural validation.
    InvalidNetwork { reason: String },
    /// A declared unit-operator insertion did not reproduce the direct value.
    InsertionMismatch { direct: f64, expanded: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DomainMismatch { variable } => {
                write!(f, "variable `{variable}` has conflicting domain definitions")
            }
            Error::UnknownVariable { variable } => write!(f, "unknown variable `{variable}`"),
            Error::UnknownState { variable, state } => {
                write!(f, "variable `{variable}` has no state `{state}`")
            }
            Error::DuplicateVariable { variable } => {
                write!(f, "variable `{variable}` bound or declared twice")
            }
            Error::Invalid { reason } => write!(f, "{reason}"),
            Error::ZeroMass => write!(f, "cannot normalize a zero-mass table"),
            Error::ImpossibleEvidence => write!(f, "evidence has probability zero"),
            Error::Cycle { nodes } => {
                write!(f, "parent graph has a cycle: {}", nodes.join(" -> "))
            }
            Error::NotAPermutation => write!(f, "order is not a permutation of the nodes"),
            Error::ResourceCap { cells, cap } => {
                write!(f, "table of {cells} cells exceeds the cap of {cap}")
            }
            Error::Parse { offset, message } => {
                write!(f, "parse error at byte {offset}: {message}")
            }
            Error::InvalidBracket(report) => write!(f, "{report}"),
            Error::InvalidNetwork { reason } => write!(f, "invalid network: {reason}"),
            Error::InsertionMismatch { direct, expanded } => write!(
                f,
                "insertion expansion {expanded} disagrees with direct value {direct}"
            ),
        }
    }
}

impl core::error::Error for Error {}
