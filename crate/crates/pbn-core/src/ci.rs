//! Numerical conditional-independence testing on explicit
//! distributions, plus a harness for the independence axioms
//! (symmetry, decomposition, weak union, contraction, intersection).

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bayesnet::{BayesianNetwork, CIStatement, NodeCpt};
use crate::factor::Factor;
use crate::variable::{Assignment, Variable};
use crate::{Error, Result};

/// Default tolerance for exact/constructed distributions.
pub const CI_TOL: f64 = 1e-9;

/// Largest table [`random_distribution`] will generate.
pub const RANDOM_CELL_CAP: usize = 1 << 16;

/// Result of an exhaustive check of one independence statement.
#[derive(Debug, Clone, PartialEq)]
pub struct CIReport {
    pub statement: CIStatement,
    pub holds: bool,
    /// Largest |P(x,y|z) - P(x|z)P(y|z)| over cells with P(z) > 0.
    pub max_deviation: f64,
    /// The assignment achieving the largest deviation, if any cell was
    /// checkable.
    pub witness: Option<Assignment>,
}

/// True iff `P(x | y, z) = P(x | z)` within `tol`, or `P(y, z) = 0`
/// (zero-probability conditionals never falsify independence).
pub fn check_event_independence(
    dist: &Factor,
    x: &Assignment,
    y: &Assignment,
    z: Option<&Assignment>,
    tol: f64,
) -> Result<bool> {
    let empty = Assignment::new();
    let z = z.unwrap_or(&empty);
    for (a, b) in [(x, y), (x, z), (y, z)] {
        for v in a.variables() {
            if b.get(v).is_some() {
                return Err(Error::DuplicateVariable {
                    variable: v.to_string(),
                });
            }
        }
    }
    for a in [x, y, z] {
        for v in a.variables() {
            dist.variable(v)?;
        }
    }
    let mass = |events: &[&Assignment]| -> Result<f64> {
        let evs: Vec<_> = events.iter().flat_map(|a| a.to_events()).collect();
        Ok(dist.restrict(&evs)?.total())
    };
    let p_yz = mass(&[y, z])?;
    if p_yz == 0.0 {
        return Ok(true);
    }
    let p_z = mass(&[z])?;
    if p_z == 0.0 {
        // unreachable when p_yz > 0, kept for clarity
        return Ok(true);
    }
    let p_xyz = mass(&[x, y, z])?;
    let p_xz = mass(&[x, z])?;
    Ok(((p_xyz / p_yz) - (p_xz / p_z)).abs() <= tol)
}

/// Exhaustively checks the factorization `P(x,y|z) = P(x|z) P(y|z)`
/// over every assignment, reporting the worst deviation.
pub fn check_variable_ci(dist: &Factor, stmt: &CIStatement, tol: f64) -> Result<CIReport> {
    let left: Vec<&Variable> = stmt
        .left
        .iter()
        .map(|n| dist.variable(n))
        .collect::<Result<_>>()?;
    let right: Vec<&Variable> = stmt
        .right
        .iter()
        .map(|n| dist.variable(n))
        .collect::<Result<_>>()?;
    let given: Vec<&Variable> = stmt
        .given
        .iter()
        .map(|n| dist.variable(n))
        .collect::<Result<_>>()?;

    let mut max_deviation = 0.0f64;
    let mut witness = None;

    for z in assignments(&given) {
        let z_events = z.to_events();
        let restricted = dist.restrict(&z_events)?;
        let p_z = restricted.total();
        if p_z == 0.0 {
            continue;
        }
        for x in assignments(&left) {
            for y in assignments(&right) {
                let xy_events: Vec<_> =
                    x.to_events().into_iter().chain(y.to_events()).collect();
                let p_xy = restricted.restrict(&xy_events)?.total() / p_z;
                let p_x = restricted.restrict(&x.to_events())?.total() / p_z;
                let p_y = restricted.restrict(&y.to_events())?.total() / p_z;
                let dev = (p_xy - p_x * p_y).abs();
                if dev >= max_deviation {
                    max_deviation = dev;
                    let mut w = Assignment::new();
                    for (v, s) in x.iter().chain(y.iter()).chain(z.iter()) {
                        w.bind(v, s)?;
                    }
                    witness = Some(w);
                }
            }
        }
    }
    Ok(CIReport {
        statement: stmt.clone(),
        holds: max_deviation <= tol,
        max_deviation,
        witness,
    })
}

/// All full assignments of `vars`, last variable fastest.
fn assignments(vars: &[&Variable]) -> Vec<Assignment> {
    let mut out = alloc::vec![Assignment::new()];
    for var in vars {
        let mut next = Vec::with_capacity(out.len() * var.cardinality());
        for a in &out {
            for state in var.states() {
                let mut b = a.clone();
                b.bind(var.name(), state.as_str()).unwrap();
                next.push(b);
            }
        }
        out = next;
    }
    out
}

/// A seeded random normalized factor over `vars`. Cells are uniform in
/// (0,1), or in (1e-3, 1) when `positive` is set, then normalized; the
/// same seed always yields bit-identical values.
pub fn random_distribution(vars: &[Variable], seed: u64, positive: bool) -> Result<Factor> {
    let cells: usize = vars.iter().map(Variable::cardinality).product();
    if cells > RANDOM_CELL_CAP {
        return Err(Error::ResourceCap {
            cells,
            cap: RANDOM_CELL_CAP,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = if positive { 1e-3 } else { 0.0 };
    let values: Vec<f64> = (0..cells).map(|_| rng.gen_range(lo..1.0)).collect();
    Factor::new(vars.to_vec(), values)?.normalize()
}

/// A seeded random network: each node takes a random subset of the
/// earlier nodes as parents and random normalized CPT rows.
pub fn random_network(node_count: usize, max_cardinality: usize, seed: u64) -> BayesianNetwork {
    assert!(node_count >= 1 && max_cardinality >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = ["A", "B", "C", "D", "E", "F", "G", "H"];
    let mut vars = Vec::new();
    for name in names.iter().take(node_count) {
        let card = rng.gen_range(2..=max_cardinality);
        let states: Vec<String> = (0..card).map(|i| alloc::format!("s{i}")).collect();
        vars.push(Variable::new(*name, states).unwrap());
    }
    let mut cpts = Vec::new();
    for i in 0..node_count {
        let parents: Vec<&str> = (0..i).filter(|_| rng.gen_bool(0.5)).map(|j| names[j]).collect();
        let rows: usize = parents
            .iter()
            .map(|p| vars.iter().find(|v| v.name() == *p).unwrap().cardinality())
            .product();
        let card = vars[i].cardinality();
        let mut values = Vec::with_capacity(rows * card);
        for _ in 0..rows {
            let mut row: Vec<f64> = (0..card).map(|_| rng.gen_range(1e-3..1.0)).collect();
            let total: f64 = row.iter().sum();
            for v in &mut row {
                *v /= total;
            }
            values.extend(row);
        }
        cpts.push(NodeCpt::new(names[i], &parents, values));
    }
    BayesianNetwork::new(vars, cpts).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axiom {
    Symmetry,
    Decomposition,
    WeakUnion,
    Contraction,
    Intersection,
}

impl Axiom {
    pub const ALL: [Axiom; 5] = [
        Axiom::Symmetry,
        Axiom::Decomposition,
        Axiom::WeakUnion,
        Axiom::Contraction,
        Axiom::Intersection,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Axiom::Symmetry => "symmetry",
            Axiom::Decomposition => "decomposition",
            Axiom::WeakUnion => "weak-union",
            Axiom::Contraction => "contraction",
            Axiom::Intersection => "intersection",
        }
    }
}

/// Outcome of one axiom test on one distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum AxiomOutcome {
    /// The antecedents did not hold, so the implication says nothing.
    Vacuous,
    Holds,
    Violated { report: CIReport },
    /// Intersection on a non-positive distribution: antecedents hold,
    /// consequent fails. Not a violation of the axiom.
    PositivityCounterexample { report: CIReport },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub results: Vec<(Axiom, AxiomOutcome)>,
}

impl AxiomReport {
    pub fn violations(&self) -> usize {
        self.results
            .iter()
            .filter(|(_, o)| matches!(o, AxiomOutcome::Violated { .. }))
            .count()
    }

    pub fn non_vacuous(&self, axiom: Axiom) -> bool {
        self.results
            .iter()
            .any(|(a, o)| *a == axiom && !matches!(o, AxiomOutcome::Vacuous))
    }
}

/// Partition of a scope into the four variable sets the axioms quantify
/// over. `x` and `y` must be nonempty; `z` and `w` may be empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomPartition {
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub z: Vec<String>,
    pub w: Vec<String>,
}

impl AxiomPartition {
    pub fn new(x: &[&str], y: &[&str], z: &[&str], w: &[&str]) -> Result<Self> {
        if x.is_empty() || y.is_empty() {
            return Err(Error::Invalid {
                reason: "axiom partition needs nonempty X and Y".to_string(),
            });
        }
        let mut seen = alloc::collections::BTreeSet::new();
        for v in x.iter().chain(y).chain(z).chain(w) {
            if !seen.insert(*v) {
                return Err(Error::DuplicateVariable {
                    variable: v.to_string(),
                });
            }
        }
        let own = |s: &[&str]| s.iter().map(|v| v.to_string()).collect();
        Ok(AxiomPartition {
            x: own(x),
            y: own(y),
            z: own(z),
            w: own(w),
        })
    }
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn union<'a>(a: &'a [String], b: &'a [String]) -> Vec<&'a str> {
    a.iter().chain(b).map(String::as_str).collect()
}

fn holds(dist: &Factor, left: &[&str], right: &[&str], given: &[&str], tol: f64) -> Result<bool> {
    let stmt = CIStatement::new(
        left.iter().copied(),
        right.iter().copied(),
        given.iter().copied(),
    )?;
    Ok(check_variable_ci(dist, &stmt, tol)?.holds)
}

fn report(dist: &Factor, left: &[&str], right: &[&str], given: &[&str], tol: f64) -> Result<CIReport> {
    let stmt = CIStatement::new(
        left.iter().copied(),
        right.iter().copied(),
        given.iter().copied(),
    )?;
    check_variable_ci(dist, &stmt, tol)
}

/// Tests each axiom as an implication on `dist`: when the antecedents
/// hold within `tol`, the consequent must too. Intersection is only
/// asserted on strictly positive distributions; on others a failing
/// consequent is reported as a positivity counterexample.
pub fn axiom_suite(dist: &Factor, partition: &AxiomPartition, tol: f64) -> Result<AxiomReport> {
    let p = partition;
    for name in p.x.iter().chain(&p.y).chain(&p.z).chain(&p.w) {
        dist.variable(name)?;
    }
    let x = strs(&p.x);
    let y = strs(&p.y);
    let z = strs(&p.z);
    let w = strs(&p.w);
    let yw = union(&p.y, &p.w);
    let zw = union(&p.z, &p.w);
    let zy = union(&p.z, &p.y);
    let positive = dist.values().iter().all(|&v| v > 0.0);

    let mut results = Vec::new();

    // symmetry: X _|_ Y | Z  =>  Y _|_ X | Z
    results.push((
        Axiom::Symmetry,
        if holds(dist, &x, &y, &z, tol)? {
            let r = report(dist, &y, &x, &z, tol)?;
            if r.holds {
                AxiomOutcome::Holds
            } else {
                AxiomOutcome::Violated { report: r }
            }
        } else {
            AxiomOutcome::Vacuous
        },
    ));

    // decomposition: X _|_ {Y,W} | Z  =>  X _|_ Y | Z  (and X _|_ W | Z)
    let joint_antecedent = holds(dist, &x, &yw, &z, tol)?;
    results.push((
        Axiom::Decomposition,
        if joint_antecedent {
            let mut bad = None;
            for side in [&y, &w] {
                if side.is_empty() {
                    continue;
                }
                let r = report(dist, &x, side, &z, tol)?;
                if !r.holds {
                    bad = Some(r);
                    break;
                }
            }
            match bad {
                Some(report) => AxiomOutcome::Violated { report },
                None => AxiomOutcome::Holds,
            }
        } else {
            AxiomOutcome::Vacuous
        },
    ));

    // weak union: X _|_ {Y,W} | Z  =>  X _|_ Y | Z,W; the derivation
    // also yields the strengthened X _|_ W | Z, checked alongside
    results.push((
        Axiom::WeakUnion,
        if joint_antecedent {
            let r1 = report(dist, &x, &y, &zw, tol)?;
            let r2 = if w.is_empty() {
                None
            } else {
                Some(report(dist, &x, &w, &z, tol)?)
            };
            if !r1.holds {
                AxiomOutcome::Violated { report: r1 }
            } else if let Some(r2) = r2.filter(|r| !r.holds) {
                AxiomOutcome::Violated { report: r2 }
            } else {
                AxiomOutcome::Holds
            }
        } else {
            AxiomOutcome::Vacuous
        },
    ));

    // contraction: (X _|_ Y | Z) and (X _|_ W | Z,Y)  =>  X _|_ {Y,W} | Z
    results.push((
        Axiom::Contraction,
        if !w.is_empty()
            && holds(dist, &x, &y, &z, tol)?
            && holds(dist, &x, &w, &zy, tol)?
        {
            let r = report(dist, &x, &yw, &z, tol)?;
            if r.holds {
                AxiomOutcome::Holds
            } else {
                AxiomOutcome::Violated { report: r }
            }
        } else {
            AxiomOutcome::Vacuous
        },
    ));

    // intersection: (X _|_ Y | Z,W) and (X _|_ W | Z,Y)  =>  X _|_ {Y,W} | Z,
    // valid only for positive distributions
    results.push((
        Axiom::Intersection,
        if !w.is_empty()
            && holds(dist, &x, &y, &zw, tol)?
            && holds(dist, &x, &w, &zy, tol)?
        {
            let r = report(dist, &x, &yw, &z, tol)?;
            if r.holds {
                AxiomOutcome::Holds
            } else if positive {
                AxiomOutcome::Violated { report: r }
            } else {
                AxiomOutcome::PositivityCounterexample { report: r }
            }
        } else {
            AxiomOutcome::Vacuous
        },
    ));

    Ok(AxiomReport { results })
}

/// Checks every statement from [`BayesianNetwork::local_independencies`]
/// against the network's own joint.
pub fn verify_local_independencies(net: &BayesianNetwork, tol: f64) -> Result<Vec<CIReport>> {
    let joint = net.joint_distribution()?;
    net.local_independencies()?
        .iter()
        .map(|stmt| check_variable_ci(&joint, stmt, tol))
        .collect()
}

/// Builds a distribution of the form `P(x|z) P(y,w|z) P(z)` from seeded
/// random conditionals, so `X _|_ {Y,W} | Z` holds by construction.
/// Used to drive non-vacuous axiom trials.
pub fn constructed_ci_distribution(
    x: &[Variable],
    y: &[Variable],
    z: &[Variable],
    w: &[Variable],
    seed: u64,
) -> Result<Factor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z_cells: usize = z.iter().map(Variable::cardinality).product();
    let x_cells: usize = x.iter().map(Variable::cardinality).product();
    let yw: Vec<Variable> = y.iter().chain(w).cloned().collect();
    let yw_cells: usize = yw.iter().map(Variable::cardinality).product();

    let mut mk_rows = |rows: usize, card: usize| -> Vec<f64> {
        let mut values = Vec::with_capacity(rows * card);
        for _ in 0..rows {
            let mut row: Vec<f64> = (0..card).map(|_| rng.gen_range(1e-3..1.0)).collect();
            let total: f64 = row.iter().sum();
            for v in &mut row {
                *v /= total;
            }
            values.extend(row);
        }
        values
    };

    let p_z = Factor::new(z.to_vec(), mk_rows(1, z_cells))?;
    let mut scope_xz = z.to_vec();
    scope_xz.extend(x.iter().cloned());
    let p_x_given_z = Factor::new(scope_xz, mk_rows(z_cells, x_cells))?;
    let mut scope_ywz = z.to_vec();
    scope_ywz.extend(yw.iter().cloned());
    let p_yw_given_z = Factor::new(scope_ywz, mk_rows(z_cells, yw_cells))?;

    p_z.product(&p_x_given_z)?.product(&p_yw_given_z)?.normalize()
}

/// The deterministic-copy distribution X = Y = W (uniform over the
/// diagonal), the standard intersection counterexample.
pub fn deterministic_copy_distribution() -> Factor {
    let vars = alloc::vec![
        Variable::new("X", ["0", "1"]).unwrap(),
        Variable::new("Y", ["0", "1"]).unwrap(),
        Variable::new("W", ["0", "1"]).unwrap(),
    ];
    // cells (x,y,w): 0.5 on (0,0,0) and (1,1,1)
    let mut values = alloc::vec![0.0; 8];
    values[0] = 0.5;
    values[7] = 0.5;
    Factor::new(vars, values).unwrap().normalize().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayesnet::student_network;

    #[test]
    fn student_pairwise_event_checks() {
        let joint = student_network().joint_distribution().unwrap();
        let x = Assignment::of(&[("D", "d0")]).unwrap();
        let y = Assignment::of(&[("I", "i1")]).unwrap();
        assert!(check_event_independence(&joint, &x, &y, None, CI_TOL).unwrap());

        // the V-structure couples D and I once G is observed
        let x = Assignment::of(&[("D", "d1")]).unwrap();
        let y = Assignment::of(&[("I", "i1")]).unwrap();
        let z = Assignment::of(&[("G", "g1")]).unwrap();
        assert!(!check_event_independence(&joint, &x, &y, Some(&z), CI_TOL).unwrap());
    }

    #[test]
    fn zero_probability_escape_clause() {
        let vars = alloc::vec![
            Variable::new("X", ["a", "b"]).unwrap(),
            Variable::new("Y", ["c", "d"]).unwrap(),
        ];
        // P(Y=d) = 0
        let dist = Factor::new(vars, alloc::vec![0.2, 0.0, 0.8, 0.0]).unwrap();
        let x = Assignment::of(&[("X", "a")]).unwrap();
        let y = Assignment::of(&[("Y", "d")]).unwrap();
        assert!(check_event_independence(&dist, &x, &y, None, CI_TOL).unwrap());
    }

    #[test]
    fn student_variable_ci_statements() {
        let joint = student_network().joint_distribution().unwrap();
        let g_s = CIStatement::new(["G"], ["S"], ["D", "I"]).unwrap();
        assert!(check_variable_ci(&joint, &g_s, CI_TOL).unwrap().holds);
        let l_rest = CIStatement::new(["L"], ["I", "D", "S"], ["G"]).unwrap();
        assert!(check_variable_ci(&joint, &l_rest, CI_TOL).unwrap().holds);
    }

    #[test]
    fn product_distribution_is_independent() {
        let x = Variable::new("X", ["a", "b"]).unwrap();
        let y = Variable::new("Y", ["c", "d", "e"]).unwrap();
        let px = Factor::new(alloc::vec![x], alloc::vec![0.3, 0.7]).unwrap();
        let py = Factor::new(alloc::vec![y], alloc::vec![0.2, 0.5, 0.3]).unwrap();
        let joint = px.product(&py).unwrap();
        let stmt = CIStatement::new(["X"], ["Y"], Vec::<String>::new()).unwrap();
        let r = check_variable_ci(&joint, &stmt, CI_TOL).unwrap();
        assert!(r.holds);
        assert!(r.max_deviation <= 1e-15);
    }

    #[test]
    fn symmetry_deviation_is_exact() {
        let vars: Vec<Variable> = ["X", "Y", "Z"]
            .iter()
            .map(|n| Variable::new(*n, ["0", "1"]).unwrap())
            .collect();
        let dist = random_distribution(&vars, 42, false).unwrap();
        let a = check_variable_ci(&dist, &CIStatement::new(["X"], ["Y"], ["Z"]).unwrap(), CI_TOL)
            .unwrap();
        let b = check_variable_ci(&dist, &CIStatement::new(["Y"], ["X"], ["Z"]).unwrap(), CI_TOL)
            .unwrap();
        assert!((a.max_deviation - b.max_deviation).abs() <= 1e-15);
    }

    #[test]
    fn random_distribution_contract() {
        let vars: Vec<Variable> = ["X", "Y", "Z"]
            .iter()
            .map(|n| Variable::new(*n, ["0", "1"]).unwrap())
            .collect();
        let pos = random_distribution(&vars, 1, true).unwrap();
        assert!(pos.values().iter().all(|&v| v > 0.0));
        let again = random_distribution(&vars, 1, true).unwrap();
        assert_eq!(pos.values(), again.values());
        let plain = random_distribution(&vars, 2, false).unwrap();
        assert!((plain.total() - 1.0).abs() < 1e-9);

        let big = Variable::new("B", (0..512).map(|i| alloc::format!("s{i}"))).unwrap();
        let too_big: Vec<Variable> = alloc::vec![big.clone(), big.clone(), Variable::new("C", ["a"]).unwrap()];
        // 512 * 512 > 2^16 even before C; expect the cap
        assert!(matches!(
            random_distribution(&too_big, 3, false),
            Err(Error::ResourceCap { .. }) | Err(Error::DuplicateVariable { .. })
        ));
    }

    #[test]
    fn constructed_distribution_satisfies_antecedents() {
        let v = |n: &str| Variable::new(n, ["0", "1"]).unwrap();
        let dist = constructed_ci_distribution(
            &[v("X")],
            &[v("Y")],
            &[v("Z")],
            &[v("W")],
            7,
        )
        .unwrap();
        let stmt = CIStatement::new(["X"], ["Y", "W"], ["Z"]).unwrap();
        assert!(check_variable_ci(&dist, &stmt, 1e-9).unwrap().holds);
        // weak union consequent
        let stmt = CIStatement::new(["X"], ["Y"], ["Z", "W"]).unwrap();
        assert!(check_variable_ci(&dist, &stmt, 1e-9).unwrap().holds);
    }

    #[test]
    fn axiom_suite_on_constructed_trials() {
        let v = |n: &str| Variable::new(n, ["0", "1"]).unwrap();
        let partition = AxiomPartition::new(&["X"], &["Y"], &["Z"], &["W"]).unwrap();
        for seed in 0..50 {
            let dist = constructed_ci_distribution(
                &[v("X")],
                &[v("Y")],
                &[v("Z")],
                &[v("W")],
                seed,
            )
            .unwrap();
            let report = axiom_suite(&dist, &partition, 1e-9).unwrap();
            assert_eq!(report.violations(), 0, "seed {seed}: {report:?}");
            assert!(report.non_vacuous(Axiom::Symmetry) || report.non_vacuous(Axiom::Decomposition));
        }
    }

    #[test]
    fn deterministic_copy_is_a_positivity_counterexample() {
        let dist = deterministic_copy_distribution();
        // Z is absent: use the empty set
        let partition = AxiomPartition::new(&["X"], &["Y"], &[], &["W"]).unwrap();
        let report = axiom_suite(&dist, &partition, 1e-9).unwrap();
        let intersection = report
            .results
            .iter()
            .find(|(a, _)| *a == Axiom::Intersection)
            .unwrap();
        assert!(
            matches!(intersection.1, AxiomOutcome::PositivityCounterexample { .. }),
            "got {:?}",
            intersection.1
        );
        assert_eq!(report.violations(), 0);
    }

    #[test]
    fn student_local_independencies_verify() {
        let reports = verify_local_independencies(&student_network(), CI_TOL).unwrap();
        assert_eq!(reports.len(), 5);
        for r in &reports {
            assert!(r.holds, "{} deviates by {}", r.statement, r.max_deviation);
            assert!(r.max_deviation < 1e-12);
        }
    }

    #[test]
    fn naive_model_all_pairs_independent() {
        let vars: Vec<Variable> = ["X", "Y", "Z"]
            .iter()
            .map(|n| Variable::new(*n, ["0", "1"]).unwrap())
            .collect();
        let cpts = alloc::vec![
            NodeCpt::new("X", &[], alloc::vec![0.3, 0.7]),
            NodeCpt::new("Y", &[], alloc::vec![0.6, 0.4]),
            NodeCpt::new("Z", &[], alloc::vec![0.5, 0.5]),
        ];
        let net = BayesianNetwork::new(vars, cpts).unwrap();
        let joint = net.joint_distribution().unwrap();
        for (a, b) in [("X", "Y"), ("X", "Z"), ("Y", "Z")] {
            let stmt = CIStatement::new([a], [b], Vec::<String>::new()).unwrap();
            assert!(check_variable_ci(&joint, &stmt, CI_TOL).unwrap().holds);
        }
    }

    #[test]
    fn constant_cpd_keeps_independence() {
        // replace P(S|I) rows with (0.5, 0.5): S decouples from everything
        let net = student_network();
        let mut cpts: Vec<NodeCpt> = net
            .variables()
            .iter()
            .map(|v| {
                NodeCpt::new(
                    v.name(),
                    &net.parents(v.name())
                        .unwrap()
                        .iter()
                        .map(String::as_str)
                        .collect::<Vec<_>>(),
                    net.cpt(v.name()).unwrap().values().to_vec(),
                )
            })
            .collect();
        cpts.iter_mut().find(|c| c.node == "S").unwrap().values =
            alloc::vec![0.5, 0.5, 0.5, 0.5];
        let flat = BayesianNetwork::new(net.variables().to_vec(), cpts).unwrap();
        let reports = verify_local_independencies(&flat, CI_TOL).unwrap();
        assert!(reports.iter().all(|r| r.holds));
        // and S is now independent of I outright
        let joint = flat.joint_distribution().unwrap();
        let stmt = CIStatement::new(["S"], ["I"], Vec::<String>::new()).unwrap();
        assert!(check_variable_ci(&joint, &stmt, CI_TOL).unwrap().holds);
    }

    #[test]
    fn random_network_is_valid_and_deterministic() {
        for seed in 0..20 {
            let net = random_network(5, 3, seed);
            assert!(net.validate().is_valid(), "seed {seed}");
            let again = random_network(5, 3, seed);
            assert_eq!(net, again);
        }
    }
}
