//! Query answering over a network, two independent ways: brute-force
//! enumeration over the full joint, and variable elimination where each
//! sum-out is one unit-operator insertion. The two must agree.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::bayesnet::{BayesianNetwork, CELL_CAP};
use crate::factor::Factor;
use crate::variable::{EventSet, Variable};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Enumeration,
    VariableElimination,
}

/// A probability query: a free target set, evidence, and how to run it.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceTask {
    pub targets: Vec<String>,
    pub evidence: Vec<EventSet>,
    pub method: Method,
    pub elimination_hint: Option<Vec<String>>,
}

impl InferenceTask {
    pub fn new(targets: &[&str], evidence: Vec<EventSet>, method: Method) -> Result<Self> {
        for t in targets {
            if evidence.iter().any(|ev| ev.variable() == *t) {
                return Err(Error::Invalid {
                    reason: alloc::format!("target `{t}` also appears in the evidence"),
                });
            }
        }
        Ok(InferenceTask {
            targets: targets.iter().map(|s| s.to_string()).collect(),
            evidence,
            method,
            elimination_hint: None,
        })
    }

    pub fn with_order(mut self, order: Vec<String>) -> Self {
        self.elimination_hint = Some(order);
        self
    }
}

/// Runs the task with its chosen method. Both methods return a
/// normalized factor with scope in target order.
pub fn query(net: &BayesianNetwork, task: &InferenceTask) -> Result<Factor> {
    match task.method {
        Method::Enumeration => query_enumeration(net, task),
        Method::VariableElimination => query_variable_elimination(net, task),
    }
}

/// The reference oracle: build the full joint, restrict by the
/// evidence, sum out everything but the targets, normalize.
pub fn query_enumeration(net: &BayesianNetwork, task: &InferenceTask) -> Result<Factor> {
    check_task(net, task)?;
    let joint = net.joint_distribution()?;
    let restricted = joint.restrict(&task.evidence)?;
    let drop: Vec<&str> = joint
        .scope()
        .iter()
        .map(Variable::name)
        .filter(|n| !task.targets.iter().any(|t| t == n))
        .collect();
    let kept = restricted.sum_out(&drop)?;
    let normalized = kept.normalize().map_err(zero_to_impossible)?;
    let order: Vec<&str> = task.targets.iter().map(String::as_str).collect();
    normalized.reorder(&order)
}

/// Variable elimination: multiply only the CPTs that matter, summing
/// out each non-target variable as soon as possible. Every sum-out is
/// one unit-operator insertion.
pub fn query_variable_elimination(net: &BayesianNetwork, task: &InferenceTask) -> Result<Factor> {
    check_task(net, task)?;
    let report = net.validate();
    if !report.is_valid() {
        return Err(Error::InvalidNetwork {
            reason: alloc::format!("{}", report.violations[0]),
        });
    }
    let relevant = relevant_nodes(net, task)?;
    let order = match &task.elimination_hint {
        Some(hint) => {
            let eliminable: BTreeSet<&str> = relevant
                .iter()
                .map(String::as_str)
                .filter(|n| !task.targets.iter().any(|t| t == n))
                .collect();
            let given: BTreeSet<&str> = hint.iter().map(String::as_str).collect();
            if given != eliminable {
                return Err(Error::NotAPermutation);
            }
            hint.clone()
        }
        None => elimination_order(net, task)?,
    };

    let mut factors: Vec<Factor> = relevant
        .iter()
        .map(|n| {
            let cpt = net.cpt(n)?;
            let applicable: Vec<EventSet> = task
                .evidence
                .iter()
                .filter(|ev| cpt.scope().iter().any(|v| v.name() == ev.variable()))
                .cloned()
                .collect();
            cpt.restrict(&applicable)
        })
        .collect::<Result<_>>()?;

    for victim in &order {
        let (touching, rest): (Vec<Factor>, Vec<Factor>) = factors
            .into_iter()
            .partition(|f| f.scope().iter().any(|v| v.name() == victim.as_str()));
        factors = rest;
        let mut prod = Factor::scalar(1.0)?;
        for f in &touching {
            prod = prod.product(f)?;
            if prod.values().len() > CELL_CAP {
                return Err(Error::ResourceCap {
                    cells: prod.values().len(),
                    cap: CELL_CAP,
                });
            }
        }
        factors.push(prod.sum_out(&[victim.as_str()])?);
    }

    let mut result = Factor::scalar(1.0)?;
    for f in &factors {
        result = result.product(f)?;
    }
    let normalized = result.normalize().map_err(zero_to_impossible)?;
    let order: Vec<&str> = task.targets.iter().map(String::as_str).collect();
    normalized.reorder(&order)
}

/// Greedy min-degree order over the moralized subgraph of the relevant
/// nodes, ties broken lexicographically. Targets are never eliminated;
/// evidence variables are (their restricted factors carry the evidence).
pub fn elimination_order(net: &BayesianNetwork, task: &InferenceTask) -> Result<Vec<String>> {
    check_task(net, task)?;
    let relevant = relevant_nodes(net, task)?;
    // moral graph: undirect every edge, marry co-parents
    let mut adj: BTreeSet<(String, String)> = BTreeSet::new();
    let link = |a: &str, b: &str, adj: &mut BTreeSet<(String, String)>| {
        if a != b {
            adj.insert((a.to_string(), b.to_string()));
            adj.insert((b.to_string(), a.to_string()));
        }
    };
    for node in &relevant {
        let parents = net.parents(node)?;
        for p in parents {
            link(node, p, &mut adj);
        }
        for (i, p) in parents.iter().enumerate() {
            for q in &parents[..i] {
                link(p, q, &mut adj);
            }
        }
    }
    let mut alive: BTreeSet<String> = relevant.iter().cloned().collect();
    let mut order = Vec::new();
    loop {
        let candidate = alive
            .iter()
            .filter(|n| !task.targets.contains(n))
            .map(|n| {
                let deg = alive
                    .iter()
                    .filter(|m| adj.contains(&(n.clone(), (*m).clone())))
                    .count();
                (deg, n.clone())
            })
            .min(); // BTreeSet iteration is sorted, so ties pick the lexicographically least
        let Some((_, victim)) = candidate else { break };
        let neighbors: Vec<String> = alive
            .iter()
            .filter(|m| adj.contains(&(victim.clone(), (*m).clone())))
            .cloned()
            .collect();
        for (i, a) in neighbors.iter().enumerate() {
            for b in &neighbors[..i] {
                link(a, b, &mut adj);
            }
        }
        alive.remove(&victim);
        order.push(victim);
    }
    Ok(order)
}

/// Every node takes part: barren leaves sum out to 1 and the moral
/// graph the order is derived from stays the whole-network one.
fn relevant_nodes(net: &BayesianNetwork, task: &InferenceTask) -> Result<Vec<String>> {
    check_task(net, task)?;
    Ok(net
        .variables()
        .iter()
        .map(|v| v.name().to_string())
        .collect())
}

fn check_task(net: &BayesianNetwork, task: &InferenceTask) -> Result<()> {
    for t in &task.targets {
        net.variable(t)?;
        if task.evidence.iter().any(|ev| ev.variable() == t) {
            return Err(Error::Invalid {
                reason: alloc::format!("target `{t}` also appears in the evidence"),
            });
        }
    }
    for ev in &task.evidence {
        ev.check_against(net.variable(ev.variable())?)?;
    }
    Ok(())
}

fn zero_to_impossible(e: Error) -> Error {
    match e {
        Error::ZeroMass => Error::ImpossibleEvidence,
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayesnet::{student_network, BayesianNetwork, NodeCpt};
    use crate::variable::Variable;

    fn task(targets: &[&str], evidence: &[(&str, &str)]) -> InferenceTask {
        let evs = evidence
            .iter()
            .map(|(v, s)| EventSet::point(v, s))
            .collect();
        InferenceTask::new(targets, evs, Method::Enumeration).unwrap()
    }

    fn scalar(f: &Factor, idx: usize) -> f64 {
        f.values()[idx]
    }

    #[test]
    fn enumeration_student_regressions() {
        let net = student_network();
        let g = query_enumeration(&net, &task(&["G"], &[])).unwrap();
        assert!((scalar(&g, 0) - 0.3620).abs() < 5e-4);
        assert!((scalar(&g, 1) - 0.2884).abs() < 5e-4);
        assert!((scalar(&g, 2) - 0.3496).abs() < 5e-4);

        let l = query_enumeration(&net, &task(&["L"], &[])).unwrap();
        assert!((scalar(&l, 1) - 0.502).abs() < 5e-4);

        let i = query_enumeration(&net, &task(&["I"], &[("G", "g3")])).unwrap();
        assert!((scalar(&i, 1) - 0.079).abs() < 5e-4);
    }

    #[test]
    fn elimination_student_regressions() {
        let net = student_network();
        let mk = |targets: &[&str], evidence: &[(&str, &str)]| {
            let mut t = task(targets, evidence);
            t.method = Method::VariableElimination;
            t
        };
        let l = query_variable_elimination(&net, &mk(&["L"], &[("I", "i0"), ("D", "d0")])).unwrap();
        assert!((scalar(&l, 1) - 0.513).abs() < 5e-4);

        let g = query_variable_elimination(&net, &mk(&["G"], &[("I", "i0")])).unwrap();
        assert!((scalar(&g, 0) - 0.20).abs() < 5e-4);
        assert!((scalar(&g, 1) - 0.34).abs() < 5e-4);
        assert!((scalar(&g, 2) - 0.46).abs() < 5e-4);

        let l = query_variable_elimination(&net, &mk(&["L"], &[("I", "i0")])).unwrap();
        assert!((scalar(&l, 1) - 0.389).abs() < 5e-4);
    }

    #[test]
    fn evidence_monotonicity_narrative() {
        let net = student_network();
        let p = |evidence: &[(&str, &str)]| {
            scalar(&query_enumeration(&net, &task(&["L"], evidence)).unwrap(), 1)
        };
        let base = p(&[]);
        let low_i = p(&[("I", "i0")]);
        let low_i_easy = p(&[("I", "i0"), ("D", "d0")]);
        assert!(base > low_i);
        assert!(low_i < low_i_easy);
    }

    #[test]
    fn elimination_order_cases() {
        let net = student_network();
        let order = elimination_order(&net, &task(&["L"], &[])).unwrap();
        assert_eq!(order.len(), 4);
        let pos = |n: &str| order.iter().position(|m| m == n).unwrap();
        assert!(pos("S") < pos("G"), "got {order:?}");

        // single-node network: nothing to eliminate
        let lone = BayesianNetwork::new(
            alloc::vec![Variable::new("X", ["a", "b"]).unwrap()],
            alloc::vec![NodeCpt::new("X", &[], alloc::vec![0.5, 0.5])],
        )
        .unwrap();
        let single = elimination_order(&lone, &task(&["X"], &[])).unwrap();
        assert!(single.is_empty());

        let chain = BayesianNetwork::new(
            alloc::vec![
                Variable::new("X", ["a", "b"]).unwrap(),
                Variable::new("Y", ["a", "b"]).unwrap(),
                Variable::new("Z", ["a", "b"]).unwrap(),
            ],
            alloc::vec![
                NodeCpt::new("X", &[], alloc::vec![0.5, 0.5]),
                NodeCpt::new("Y", &["X"], alloc::vec![0.2, 0.8, 0.7, 0.3]),
                NodeCpt::new("Z", &["Y"], alloc::vec![0.1, 0.9, 0.4, 0.6]),
            ],
        )
        .unwrap();
        assert_eq!(
            elimination_order(&chain, &task(&["Z"], &[])).unwrap(),
            ["X", "Y"]
        );
    }

    #[test]
    #[allow(clippy::type_complexity)]
    fn methods_agree_on_student_queries() {
        let net = student_network();
        let cases: &[(&[&str], &[(&str, &str)])] = &[
            (&["G"], &[]),
            (&["L"], &[("I", "i0")]),
            (&["I", "D"], &[("G", "g2")]),
            (&["S"], &[("L", "l1"), ("D", "d1")]),
        ];
        for (targets, evidence) in cases {
            let t = task(targets, evidence);
            let a = query_enumeration(&net, &t).unwrap();
            let b = query_variable_elimination(&net, &t).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn impossible_evidence_is_reported() {
        let vars = alloc::vec![
            Variable::new("X", ["a", "b"]).unwrap(),
            Variable::new("Y", ["c", "d"]).unwrap(),
        ];
        let cpts = alloc::vec![
            NodeCpt::new("X", &[], alloc::vec![1.0, 0.0]),
            NodeCpt::new("Y", &["X"], alloc::vec![0.5, 0.5, 0.5, 0.5]),
        ];
        let net = BayesianNetwork::new(vars, cpts).unwrap();
        let t = task(&["Y"], &[("X", "b")]);
        assert_eq!(query_enumeration(&net, &t), Err(Error::ImpossibleEvidence));
        assert_eq!(
            query_variable_elimination(&net, &t),
            Err(Error::ImpossibleEvidence)
        );
    }

    #[test]
    fn explicit_order_must_cover_eliminable_set() {
        let net = student_network();
        let t = task(&["L"], &[]).with_order(alloc::vec!["D".to_string()]);
        assert_eq!(query_variable_elimination(&net, &t), Err(Error::NotAPermutation));
    }
}
