//! File formats and command-line front end for the `pbn-core`
//! inference engine.
//!
//! - [`document`]: the in-memory network document shared by both
//!   serialization formats.
//! - [`elvira`]: a documented subset of the Elvira text format.
//! - [`native`]: a lossless JSON interchange format.
//! - [`app`]: the `pbn` command-line application.

pub mod app;
pub mod document;
pub mod elvira;
pub mod native;

pub use document::{FormatError, NetworkDocument, Parsed};
