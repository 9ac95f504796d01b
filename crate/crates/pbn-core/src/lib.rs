//! Exact inference for discrete Bayesian networks, organized around
//! probability bracket queries.
//!
//! The crate is `no_std` (with `alloc`): all computation is pure and
//! allocation-backed, with no IO. File formats and the command-line
//! front end live in the companion `pbn-cli` crate.
//!
//! Layout:
//! - [`variable`]: discrete variables, assignments, per-variable event
//!   sets and real-valued state functions
//! - [`factor`]: dense factor tables and their algebra (product,
//!   marginalization, restriction, conditioning, expectation)
//! - [`bayesnet`]: DAG + CPT networks, validation, chain-rule
//!   factorization, local independencies, the Student fixture
//! - [`bracket`]: the bracket query language — parser, well-formedness
//!   rules for unit-operator insertion, and the evaluator
//! - [`inference`]: enumeration and variable-elimination query answering
//! - [`ci`]: numerical conditional-independence checking and the
//!   independence-axiom test harness

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bayesnet;
pub mod bracket;
pub mod ci;
mod error;
pub mod factor;
pub mod inference;
pub mod variable;

pub use bayesnet::BayesianNetwork;
pub use bracket::{BracketExpression, QueryResult};
pub use error::Error;
pub use factor::Factor;
pub use variable::{Assignment, EventSet, StateFunction, Variable};

pub type Result<T> = core::result::Result<T, Error>;
