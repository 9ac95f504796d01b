//! The in-memory network document shared by the Elvira and native
//! serializers: a named node list, edge list and per-node CPT value
//! arrays, all order-preserving.

use std::collections::BTreeMap;

use pbn_core::bayesnet::{BayesianNetwork, NodeCpt};
use pbn_core::variable::Variable;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rows whose mass is off 1 by at most this much are renormalized with
/// a warning; larger defects are rejected.
pub const ROW_REPAIR_TOL: f64 = 1e-6;

/// Row defects below this threshold are left untouched (and below the
/// engine's own normalization tolerance).
const ROW_EXACT_TOL: f64 = 1e-9;

/// Errors raised by the file-format layer.
#[derive(Debug, Error)]
pub enum FormatError {
    /// Lexical or grammatical error in an Elvira document.
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    /// Structural error in the JSON layer of a native document.
    #[error("schema error at {location}: {message}")]
    Schema { location: String, message: String },
    /// The document parses but does not describe a valid network. The
    /// path locates the offending element (`cpts.G`, `edges[2]`, ...).
    #[error("invalid network at {path}: {message}")]
    Document { path: String, message: String },
}

impl FormatError {
    pub fn document(path: impl Into<String>, message: impl Into<String>) -> Self {
        FormatError::Document {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// A parsed network plus its document name and any non-fatal warnings
/// (ignored cosmetic fields, repaired rows).
#[derive(Debug, Clone)]
pub struct Parsed {
    pub name: String,
    pub network: BayesianNetwork,
    pub warnings: Vec<String>,
}

/// A node declaration: name plus ordered state labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDecl {
    pub name: String,
    pub states: Vec<String>,
}

/// A format-agnostic network document. CPT value arrays are row-major
/// over (parents in edge-declaration order, node states fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    pub name: String,
    pub nodes: Vec<NodeDecl>,
    pub edges: Vec<(String, String)>,
    pub cpts: BTreeMap<String, Vec<f64>>,
}

impl NetworkDocument {
    /// Captures a validated network (and a display name) losslessly.
    pub fn from_network(name: &str, net: &BayesianNetwork) -> Self {
        let nodes = net
            .variables()
            .iter()
            .map(|v| NodeDecl {
                name: v.name().to_string(),
                states: v.states().to_vec(),
            })
            .collect();
        let mut edges = Vec::new();
        let mut cpts = BTreeMap::new();
        for v in net.variables() {
            for p in net.parents(v.name()).expect("declared node") {
                edges.push((p.clone(), v.name().to_string()));
            }
            let cpt = net.cpt(v.name()).expect("declared node");
            cpts.insert(v.name().to_string(), cpt.values().to_vec());
        }
        NetworkDocument {
            name: name.to_string(),
            nodes,
            edges,
            cpts,
        }
    }

    /// Assembles and validates the network the document describes.
    /// Rows off-normal by at most [`ROW_REPAIR_TOL`] are renormalized
    /// with a warning; anything worse is an error.
    pub fn build(&self) -> Result<Parsed, FormatError> {
        let mut warnings = Vec::new();
        let mut variables = Vec::with_capacity(self.nodes.len());
        for (i, decl) in self.nodes.iter().enumerate() {
            let var = Variable::new(&decl.name, decl.states.iter().cloned())
                .map_err(|e| FormatError::document(format!("nodes[{i}]"), e.to_string()))?;
            if variables.iter().any(|v: &Variable| v.name() == decl.name) {
                return Err(FormatError::document(
                    format!("nodes[{i}]"),
                    format!("node `{}` declared twice", decl.name),
                ));
            }
            variables.push(var);
        }
        let declared = |name: &str| variables.iter().find(|v| v.name() == name);

        let mut parents: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (i, (parent, child)) in self.edges.iter().enumerate() {
            for end in [parent, child] {
                if declared(end).is_none() {
                    return Err(FormatError::document(
                        format!("edges[{i}]"),
                        format!("link endpoint `{end}` is not a declared node"),
                    ));
                }
            }
            let list = parents.entry(child.as_str()).or_default();
            if list.contains(&parent.as_str()) {
                return Err(FormatError::document(
                    format!("edges[{i}]"),
                    format!("duplicate link {parent} -> {child}"),
                ));
            }
            list.push(parent.as_str());
        }

        for node in self.cpts.keys() {
            if declared(node).is_none() {
                return Err(FormatError::document(
                    format!("cpts.{node}"),
                    format!("CPT given for undeclared node `{node}`"),
                ));
            }
        }

        let mut specs = Vec::with_capacity(variables.len());
        for var in &variables {
            let node = var.name();
            let path = format!("cpts.{node}");
            let values = self.cpts.get(node).ok_or_else(|| {
                FormatError::document(&path, format!("node `{node}` has no CPT; one is required"))
            })?;
            let pars = parents.get(node).cloned().unwrap_or_default();
            let mut expected = var.cardinality();
            for p in &pars {
                let card = declared(p).expect("checked above").cardinality();
                expected = expected.checked_mul(card).ok_or_else(|| {
                    FormatError::document(&path, "CPT size overflows".to_string())
                })?;
            }
            if values.len() != expected {
                return Err(FormatError::document(
                    &path,
                    format!(
                        "node `{node}` needs {expected} CPT values \
                         (parent configurations x {} states), got {}",
                        var.cardinality(),
                        values.len()
                    ),
                ));
            }
            let mut values = values.clone();
            for (r, row) in values.chunks_mut(var.cardinality()).enumerate() {
                if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(FormatError::document(
                        &path,
                        format!("node `{node}`, row {r}: values must be finite and nonnegative"),
                    ));
                }
                let sum: f64 = row.iter().sum();
                let off = (sum - 1.0).abs();
                if off > ROW_REPAIR_TOL {
                    return Err(FormatError::document(
                        &path,
                        format!("node `{node}`, row {r}: mass {sum} is not 1"),
                    ));
                }
                if off > ROW_EXACT_TOL {
                    warnings.push(format!(
                        "node `{node}`, row {r}: mass {sum} renormalized to 1"
                    ));
                    for v in row {
                        *v /= sum;
                    }
                }
            }
            specs.push(NodeCpt::new(node, &pars, values));
        }

        let network = BayesianNetwork::new(variables, specs)
            .map_err(|e| FormatError::document("network", e.to_string()))?;
        let report = network.validate();
        if !report.is_valid() {
            let reasons: Vec<String> =
                report.violations.iter().map(|v| v.to_string()).collect();
            return Err(FormatError::document("network", reasons.join("; ")));
        }
        Ok(Parsed {
            name: self.name.clone(),
            network,
            warnings,
        })
    }
}
