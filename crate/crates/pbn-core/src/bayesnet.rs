//! Bayesian networks: DAG structure, per-node CPTs, validation,
//! chain-rule factorization, local independencies and the Student
//! fixture.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::factor::{Factor, NORMALIZATION_TOL};
use crate::variable::Variable;
use crate::{Error, Result};

/// Largest table the joint construction will materialize.
pub const CELL_CAP: usize = 1 << 20;

/// A conditional-independence statement `left ⊥ right | given`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CIStatement {
    pub left: Vec<String>,
    pub right: Vec<String>,
    pub given: Vec<String>,
}

impl CIStatement {
    pub fn new(
        left: impl IntoIterator<Item = impl Into<String>>,
        right: impl IntoIterator<Item = impl Into<String>>,
        given: impl IntoIterator<Item = impl Into<String>>,
    ) -> Result<Self> {
        let stmt = CIStatement {
            left: left.into_iter().map(Into::into).collect(),
            right: right.into_iter().map(Into::into).collect(),
            given: given.into_iter().map(Into::into).collect(),
        };
        if stmt.left.is_empty() || stmt.right.is_empty() {
            return Err(Error::Invalid {
                reason: "independence statement needs nonempty sides".to_string(),
            });
        }
        let mut seen = BTreeSet::new();
        for name in stmt.left.iter().chain(&stmt.right).chain(&stmt.given) {
            if !seen.insert(name.clone()) {
                return Err(Error::DuplicateVariable {
                    variable: name.clone(),
                });
            }
        }
        Ok(stmt)
    }
}

impl core::fmt::Display for CIStatement {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{} _|_ {}", self.left.join(","), self.right.join(","))?;
        if !self.given.is_empty() {
            write!(f, " | {}", self.given.join(","))?;
        }
        Ok(())
    }
}

/// One structural defect found by [`BayesianNetwork::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Cycle { nodes: Vec<String> },
    /// A CPT row (fixed parent assignment) does not sum to 1.
    RowNotNormalized {
        node: String,
        row: usize,
        sum: f64,
    },
    /// A CPT's scope is not (parents..., node).
    ScopeMismatch { node: String },
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Violation::Cycle { nodes } => write!(f, "cycle: {}", nodes.join(" -> ")),
            Violation::RowNotNormalized { node, row, sum } => {
                write!(f, "CPT row {row} of `{node}` sums to {sum}, not 1")
            }
            Violation::ScopeMismatch { node } => {
                write!(f, "CPT of `{node}` has the wrong scope")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub node_count: usize,
    pub cpt_row_count: usize,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A chain-rule term for one node: the generic conditioning set (all
/// predecessors in the chosen order) and the reduced set (parents only).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainTerm {
    pub node: String,
    pub generic: Vec<String>,
    pub reduced: Vec<String>,
}

/// A discrete Bayesian network: variables in declaration order, a parent
/// list per node and one CPT per node with scope (parents..., node).
#[derive(Debug, Clone, PartialEq)]
pub struct BayesianNetwork {
    variables: Vec<Variable>,
    parents: BTreeMap<String, Vec<String>>,
    cpts: BTreeMap<String, Factor>,
}

impl BayesianNetwork {
    /// Assembles a network from `(node, parents, row-major values)`
    /// triples, one per declared variable, with the node's states
    /// varying fastest. Structural impossibilities (unknown names,
    /// wrong value counts) are construction errors; cycles and
    /// non-normalized rows are left for [`validate`](Self::validate).
    pub fn new(variables: Vec<Variable>, cpt_specs: Vec<NodeCpt>) -> Result<Self> {
        for (i, v) in variables.iter().enumerate() {
            if variables[..i].iter().any(|w| w.name() == v.name()) {
                return Err(Error::DuplicateVariable {
                    variable: v.name().to_string(),
                });
            }
        }
        let lookup = |name: &str| -> Result<&Variable> {
            variables
                .iter()
                .find(|v| v.name() == name)
                .ok_or_else(|| Error::UnknownVariable {
                    variable: name.to_string(),
                })
        };
        let mut parents = BTreeMap::new();
        let mut cpts = BTreeMap::new();
        for spec in cpt_specs {
            let node = lookup(&spec.node)?.clone();
            let mut scope: Vec<Variable> = Vec::with_capacity(spec.parents.len() + 1);
            for p in &spec.parents {
                let pv = lookup(p)?;
                if pv.name() == node.name() {
                    return Err(Error::InvalidNetwork {
                        reason: alloc::format!("node `{}` lists itself as a parent", node.name()),
                    });
                }
                scope.push(pv.clone());
            }
            scope.push(node.clone());
            let cpt = Factor::new(scope, spec.values)?;
            if parents.insert(spec.node.clone(), spec.parents).is_some() {
                return Err(Error::DuplicateVariable { variable: spec.node });
            }
            cpts.insert(spec.node, cpt);
        }
        for v in &variables {
            if !cpts.contains_key(v.name()) {
                return Err(Error::InvalidNetwork {
                    reason: alloc::format!("node `{}` has no CPT", v.name()),
                });
            }
        }
        Ok(BayesianNetwork {
            variables,
            parents,
            cpts,
        })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, name: &str) -> Result<&Variable> {
        self.variables
            .iter()
            .find(|v| v.name() == name)
            .ok_or_else(|| Error::UnknownVariable {
                variable: name.to_string(),
            })
    }

    pub fn parents(&self, node: &str) -> Result<&[String]> {
        self.parents
            .get(node)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownVariable {
                variable: node.to_string(),
            })
    }

    pub fn cpt(&self, node: &str) -> Result<&Factor> {
        self.cpts.get(node).ok_or_else(|| Error::UnknownVariable {
            variable: node.to_string(),
        })
    }

    /// Checks acyclicity, CPT row normalization and CPT scope order.
    /// Violations are reported, not raised.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport {
            node_count: self.variables.len(),
            ..ValidationReport::default()
        };
        if let Err(Error::Cycle { nodes }) = self.topological_order() {
            report.violations.push(Violation::Cycle { nodes });
        }
        for v in &self.variables {
            let node = v.name();
            let cpt = &self.cpts[node];
            let expected_scope: Vec<&str> = self.parents[node]
                .iter()
                .map(String::as_str)
                .chain(core::iter::once(node))
                .collect();
            let actual: Vec<&str> = cpt.scope().iter().map(Variable::name).collect();
            if actual != expected_scope {
                report.violations.push(Violation::ScopeMismatch {
                    node: node.to_string(),
                });
                continue;
            }
            // node states vary fastest, so rows are contiguous chunks
            let card = v.cardinality();
            for (row, chunk) in cpt.values().chunks(card).enumerate() {
                report.cpt_row_count += 1;
                let sum: f64 = chunk.iter().sum();
                if (sum - 1.0).abs() > NORMALIZATION_TOL {
                    report.violations.push(Violation::RowNotNormalized {
                        node: node.to_string(),
                        row,
                        sum,
                    });
                }
            }
        }
        report
    }

    /// Nodes in an order placing every parent before its children,
    /// declaration order breaking ties.
    pub fn topological_order(&self) -> Result<Vec<String>> {
        let mut remaining: Vec<&str> = self.variables.iter().map(Variable::name).collect();
        let mut placed: BTreeSet<&str> = BTreeSet::new();
        let mut order = Vec::with_capacity(remaining.len());
        while !remaining.is_empty() {
            let next = remaining.iter().position(|&n| {
                self.parents[n].iter().all(|p| placed.contains(p.as_str()))
            });
            match next {
                Some(i) => {
                    let n = remaining.remove(i);
                    placed.insert(n);
                    order.push(n.to_string());
                }
                None => {
                    return Err(Error::Cycle {
                        nodes: self.find_cycle(&remaining),
                    })
                }
            }
        }
        Ok(order)
    }

    /// Walks parent links among `stuck` nodes until one repeats.
    fn find_cycle(&self, stuck: &[&str]) -> Vec<String> {
        let stuck_set: BTreeSet<&str> = stuck.iter().copied().collect();
        let mut path: Vec<&str> = alloc::vec![stuck[0]];
        loop {
            let cur = *path.last().unwrap();
            let next = self.parents[cur]
                .iter()
                .map(String::as_str)
                .find(|p| stuck_set.contains(p))
                .expect("stuck node must have a stuck parent");
            if let Some(start) = path.iter().position(|&n| n == next) {
                let mut cycle: Vec<String> = path[start..].iter().map(|s| s.to_string()).collect();
                cycle.push(next.to_string());
                cycle.reverse(); // parent links run backwards along the cycle
                return cycle;
            }
            path.push(next);
        }
    }

    /// The full joint as the product of all CPTs in topological order.
    pub fn joint_distribution(&self) -> Result<Factor> {
        let report = self.validate();
        if !report.is_valid() {
            return Err(Error::InvalidNetwork {
                reason: alloc::format!("{}", report.violations[0]),
            });
        }
        let cells: usize = self.variables.iter().map(Variable::cardinality).product();
        if cells > CELL_CAP {
            return Err(Error::ResourceCap {
                cells,
                cap: CELL_CAP,
            });
        }
        let order = self.topological_order()?;
        let mut joint = Factor::scalar(1.0)?;
        for node in &order {
            joint = joint.product(&self.cpts[node])?;
        }
        joint.normalize()
    }

    fn descendants(&self, node: &str) -> BTreeSet<String> {
        let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for v in &self.variables {
            for p in &self.parents[v.name()] {
                children.entry(p.as_str()).or_default().push(v.name());
            }
        }
        let mut out = BTreeSet::new();
        let mut stack = alloc::vec![node];
        while let Some(cur) = stack.pop() {
            for &c in children.get(cur).map(Vec::as_slice).unwrap_or(&[]) {
                if out.insert(c.to_string()) {
                    stack.push(c);
                }
            }
        }
        out
    }

    /// One statement per node with a nonempty non-descendant set beyond
    /// its parents: `X ⊥ NonDesc(X) \ Pa(X) | Pa(X)`.
    pub fn local_independencies(&self) -> Result<Vec<CIStatement>> {
        self.topological_order()?;
        let mut out = Vec::new();
        for v in &self.variables {
            let node = v.name();
            let desc = self.descendants(node);
            let pa: BTreeSet<&str> = self.parents[node].iter().map(String::as_str).collect();
            let right: Vec<&str> = self
                .variables
                .iter()
                .map(Variable::name)
                .filter(|&n| n != node && !desc.contains(n) && !pa.contains(n))
                .collect();
            if right.is_empty() {
                continue;
            }
            out.push(CIStatement::new(
                [node],
                right,
                self.parents[node].iter().map(String::as_str),
            )?);
        }
        Ok(out)
    }

    /// For a node order, pairs every node's generic chain-rule
    /// conditioning set (all predecessors) with its reduced set (the
    /// node's parents).
    pub fn chain_rule_factorization(&self, order: &[&str]) -> Result<Vec<ChainTerm>> {
        if order.len() != self.variables.len() {
            return Err(Error::NotAPermutation);
        }
        let mut seen = BTreeSet::new();
        for n in order {
            self.variable(n)?;
            if !seen.insert(*n) {
                return Err(Error::NotAPermutation);
            }
        }
        Ok(order
            .iter()
            .enumerate()
            .map(|(i, &node)| ChainTerm {
                node: node.to_string(),
                generic: order[..i].iter().map(|s| s.to_string()).collect(),
                reduced: self.parents[node].clone(),
            })
            .collect())
    }
}

/// A node's CPT specification: parents in declared order, values
/// row-major with the node's states varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeCpt {
    pub node: String,
    pub parents: Vec<String>,
    pub values: Vec<f64>,
}

impl NodeCpt {
    pub fn new(node: &str, parents: &[&str], values: Vec<f64>) -> Self {
        NodeCpt {
            node: node.to_string(),
            parents: parents.iter().map(|s| s.to_string()).collect(),
            values,
        }
    }
}

/// The five-node Student network: Difficulty and Intelligence feed
/// Grade, Intelligence feeds SAT, Grade feeds Letter.
pub fn student_network() -> BayesianNetwork {
    let vars = alloc::vec![
        Variable::new("D", ["d0", "d1"]).unwrap(),
        Variable::new("I", ["i0", "i1"]).unwrap(),
        Variable::new("G", ["g1", "g2", "g3"]).unwrap(),
        Variable::new("S", ["s0", "s1"]).unwrap(),
        Variable::new("L", ["l0", "l1"]).unwrap(),
    ];
    let cpts = alloc::vec![
        NodeCpt::new("D", &[], alloc::vec![0.6, 0.4]),
        NodeCpt::new("I", &[], alloc::vec![0.7, 0.3]),
        NodeCpt::new(
            "G",
            &["I", "D"],
            alloc::vec![
                0.3, 0.4, 0.3, // i0 d0
                0.05, 0.25, 0.7, // i0 d1
                0.9, 0.08, 0.02, // i1 d0
                0.5, 0.3, 0.2, // i1 d1
            ],
        ),
        NodeCpt::new("S", &["I"], alloc::vec![0.95, 0.05, 0.2, 0.8]),
        NodeCpt::new("L", &["G"], alloc::vec![0.1, 0.9, 0.4, 0.6, 0.99, 0.01]),
    ];
    BayesianNetwork::new(vars, cpts).unwrap()
}

/// The two-node Intelligence/SAT subnet used throughout the two-variable
/// worked examples.
pub fn intelligence_sat_network() -> BayesianNetwork {
    let vars = alloc::vec![
        Variable::new("I", ["i0", "i1"]).unwrap(),
        Variable::new("S", ["s0", "s1"]).unwrap(),
    ];
    let cpts = alloc::vec![
        NodeCpt::new("I", &[], alloc::vec![0.7, 0.3]),
        NodeCpt::new("S", &["I"], alloc::vec![0.95, 0.05, 0.2, 0.8]),
    ];
    BayesianNetwork::new(vars, cpts).unwrap()
}
