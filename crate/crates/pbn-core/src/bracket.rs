//! The probability bracket query language.
//!
//! Queries are written in a plain-ASCII form of bracket notation:
//!
//! ```text
//! P(G)                          marginal table
//! P(L=l1 | I=i0, D=d0)          conditional scalar
//! P(S=s1 | [I] | Omega)         unit operator I_I inserted before the ket
//! P(I=i0 | S | S=s1)            operator bracket: value(s1) * P(i0 | s1)
//! E[F | G=g1]                   conditional expectation of a named function
//! ```
//!
//! `[V1,V2]` inserts the unit operator of the joint variable set, `Omega`
//! is the whole sample space, and `V in {a,b}` is disjunctive evidence.
//! Insertions expand to explicit sums over states; for a well-formed
//! bracket the expansion must reproduce the direct value. Brackets that
//! break the insertion rules are rejected unless evaluated in forced
//! diagnostic mode.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::bayesnet::BayesianNetwork;
use crate::factor::Factor;
use crate::variable::{Assignment, EventSet, StateFunction, Variable};
use crate::{Error, Result};

/// Tolerance for the insertion-invariance check and for evidence-slice
/// normalization of table results.
pub const INSERTION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Bound { variable: String, state: String },
    Free { variable: String },
}

impl Target {
    pub fn variable(&self) -> &str {
        match self {
            Target::Bound { variable, .. } | Target::Free { variable } => variable,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ket {
    /// The whole sample space; also what an omitted ket means.
    Omega,
    Evidence(Vec<EventSet>),
    /// The operator form `P(A | F | ev)`.
    Operator { function: String, event: EventSet },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BracketKind {
    Probability,
    Expectation,
    OperatorBracket,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BracketExpression {
    Probability {
        targets: Vec<Target>,
        /// Unit operators to insert between bra and ket, outermost first.
        insertions: Vec<Vec<String>>,
        ket: Ket,
    },
    Expectation {
        function: String,
        evidence: Vec<EventSet>,
    },
}

impl BracketExpression {
    pub fn kind(&self) -> BracketKind {
        match self {
            BracketExpression::Probability { ket: Ket::Operator { .. }, .. } => {
                BracketKind::OperatorBracket
            }
            BracketExpression::Probability { .. } => BracketKind::Probability,
            BracketExpression::Expectation { .. } => BracketKind::Expectation,
        }
    }
}

impl fmt::Display for BracketExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_ev(f: &mut fmt::Formatter<'_>, ev: &EventSet) -> fmt::Result {
            if ev.states().len() == 1 {
                write!(f, "{}={}", ev.variable(), ev.states()[0])
            } else {
                write!(f, "{} in {{{}}}", ev.variable(), ev.states().join(","))
            }
        }
        fn write_evs(f: &mut fmt::Formatter<'_>, evs: &[EventSet]) -> fmt::Result {
            for (i, ev) in evs.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write_ev(f, ev)?;
            }
            Ok(())
        }
        match self {
            BracketExpression::Probability {
                targets,
                insertions,
                ket,
            } => {
                write!(f, "P(")?;
                for (i, t) in targets.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    match t {
                        Target::Bound { variable, state } => write!(f, "{variable}={state}")?,
                        Target::Free { variable } => write!(f, "{variable}")?,
                    }
                }
                for ins in insertions {
                    write!(f, " | [{}]", ins.join(","))?;
                }
                match ket {
                    Ket::Omega => write!(f, " | Omega")?,
                    Ket::Evidence(evs) => {
                        write!(f, " | ")?;
                        write_evs(f, evs)?;
                    }
                    Ket::Operator { function, event } => {
                        write!(f, " | {function} | ")?;
                        write_ev(f, event)?;
                    }
                }
                write!(f, ")")
            }
            BracketExpression::Expectation { function, evidence } => {
                write!(f, "E[{function}")?;
                if !evidence.is_empty() {
                    write!(f, " | ")?;
                    write_evs(f, evidence)?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Outcome of the well-formedness rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Validity {
    WellFormed,
    /// A unit operator of a foreign variable inserted into a
    /// same-domain bracket with a fixed (non-Omega) ket.
    InvalidInsertion { operator: Vec<String> },
    /// An operator applied to a ket that neither fixes the operator's
    /// variables nor is Omega.
    Meaningless { function: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidityReport {
    pub validity: Validity,
    pub detail: String,
}

impl ValidityReport {
    pub fn is_well_formed(&self) -> bool {
        self.validity == Validity::WellFormed
    }

    fn well_formed() -> Self {
        ValidityReport {
            validity: Validity::WellFormed,
            detail: String::new(),
        }
    }
}

impl fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.validity {
            Validity::WellFormed => write!(f, "well-formed"),
            Validity::InvalidInsertion { operator } => {
                write!(f, "invalid insertion of I_{{{}}}: {}", operator.join(","), self.detail)
            }
            Validity::Meaningless { function } => {
                write!(f, "meaningless operator bracket `{function}`: {}", self.detail)
            }
        }
    }
}

/// A scalar for fully bound targets, a normalized table over the free
/// targets otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryResult {
    Scalar(f64),
    Table(Factor),
}

impl QueryResult {
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            QueryResult::Scalar(v) => Some(*v),
            QueryResult::Table(_) => None,
        }
    }

    pub fn as_table(&self) -> Option<&Factor> {
        match self {
            QueryResult::Scalar(_) => None,
            QueryResult::Table(f) => Some(f),
        }
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Name(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Bar,
    Comma,
    Eq,
}

struct Lexer<'a> {
    text: &'a str,
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Result<Self> {
        let mut toks = Vec::new();
        let bytes = text.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            let tok = match c {
                ' ' | '\t' | '\r' | '\n' => {
                    i += 1;
                    continue;
                }
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '|' => Tok::Bar,
                ',' => Tok::Comma,
                '=' => Tok::Eq,
                'A'..='Z' | 'a'..='z' | '_' => {
                    let start = i;
                    while i < bytes.len()
                        && matches!(bytes[i] as char, 'A'..='Z' | 'a'..='z' | '0'..='9' | '_')
                    {
                        i += 1;
                    }
                    toks.push((start, Tok::Name(text[start..i].to_string())));
                    continue;
                }
                other => {
                    return Err(Error::Parse {
                        offset: i,
                        message: alloc::format!("unexpected character `{other}`"),
                    })
                }
            };
            toks.push((i, tok));
            i += 1;
        }
        Ok(Lexer { text, toks, pos: 0 })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|(o, _)| *o)
            .unwrap_or(self.text.len())
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        let offset = self.offset();
        match self.next() {
            Some(t) if t == want => Ok(()),
            _ => Err(Error::Parse {
                offset,
                message: alloc::format!("expected {what}"),
            }),
        }
    }

    fn name(&mut self, what: &str) -> Result<String> {
        let offset = self.offset();
        match self.next() {
            Some(Tok::Name(n)) => Ok(n),
            _ => Err(Error::Parse {
                offset,
                message: alloc::format!("expected {what}"),
            }),
        }
    }

    fn err<T>(&self, message: &str) -> Result<T> {
        Err(Error::Parse {
            offset: self.offset(),
            message: message.to_string(),
        })
    }
}

/// Parses a bracket query. Whitespace-insensitive, case-sensitive;
/// `Omega` is reserved.
pub fn parse_query(text: &str) -> Result<BracketExpression> {
    if text.trim().is_empty() {
        return Err(Error::Parse {
            offset: 0,
            message: "empty query".to_string(),
        });
    }
    let mut lx = Lexer::new(text)?;
    let head = lx.name("`P` or `E`")?;
    let expr = match head.as_str() {
        "P" => parse_prob(&mut lx)?,
        "E" => parse_expect(&mut lx)?,
        _ => {
            return Err(Error::Parse {
                offset: 0,
                message: "query must start with `P(` or `E[`".to_string(),
            })
        }
    };
    if lx.peek().is_some() {
        return lx.err("trailing input after query");
    }
    Ok(expr)
}

fn parse_prob(lx: &mut Lexer) -> Result<BracketExpression> {
    lx.expect(Tok::LParen, "`(`")?;
    let targets = parse_targets(lx)?;
    let mut insertions = Vec::new();
    let mut ket = Ket::Omega;
    while lx.peek() == Some(&Tok::Bar) {
        lx.next();
        if lx.peek() == Some(&Tok::LBracket) {
            insertions.push(parse_insertion(lx)?);
        } else {
            ket = parse_ket(lx)?;
            break;
        }
    }
    lx.expect(Tok::RParen, "`)`")?;
    Ok(BracketExpression::Probability {
        targets,
        insertions,
        ket,
    })
}

fn parse_targets(lx: &mut Lexer) -> Result<Vec<Target>> {
    let mut targets = Vec::new();
    let mut seen = BTreeSet::new();
    loop {
        let offset = lx.offset();
        let variable = lx.name("a variable name")?;
        if variable == "Omega" {
            return Err(Error::Parse {
                offset,
                message: "`Omega` cannot be a target".to_string(),
            });
        }
        if !seen.insert(variable.clone()) {
            return Err(Error::Parse {
                offset,
                message: alloc::format!("duplicate target variable `{variable}`"),
            });
        }
        let target = if lx.peek() == Some(&Tok::Eq) {
            lx.next();
            let state = lx.name("a state name")?;
            Target::Bound { variable, state }
        } else {
            Target::Free { variable }
        };
        targets.push(target);
        if lx.peek() == Some(&Tok::Comma) {
            lx.next();
        } else {
            return Ok(targets);
        }
    }
}

fn parse_insertion(lx: &mut Lexer) -> Result<Vec<String>> {
    lx.expect(Tok::LBracket, "`[`")?;
    let mut vars = Vec::new();
    loop {
        let offset = lx.offset();
        let name = lx.name("a variable name")?;
        if vars.contains(&name) {
            return Err(Error::Parse {
                offset,
                message: alloc::format!("duplicate variable `{name}` in insertion"),
            });
        }
        vars.push(name);
        match lx.next() {
            Some(Tok::Comma) => continue,
            Some(Tok::RBracket) => return Ok(vars),
            _ => return lx.err("expected `,` or `]` in insertion"),
        }
    }
}

fn parse_ket(lx: &mut Lexer) -> Result<Ket> {
    // Omega | evidence list | operator form `F | ev`
    if lx.peek() == Some(&Tok::Name("Omega".to_string())) && lx.peek2() != Some(&Tok::Eq) {
        lx.next();
        return Ok(Ket::Omega);
    }
    // a bare name followed by `|` is the operator form
    if let Some(Tok::Name(_)) = lx.peek() {
        if lx.peek2() == Some(&Tok::Bar) {
            let function = lx.name("a function name")?;
            lx.expect(Tok::Bar, "`|`")?;
            let event = parse_ev(lx)?;
            return Ok(Ket::Operator { function, event });
        }
    }
    let mut evs = Vec::new();
    let mut seen = BTreeSet::new();
    loop {
        let offset = lx.offset();
        let ev = parse_ev(lx)?;
        if !seen.insert(ev.variable().to_string()) {
            return Err(Error::Parse {
                offset,
                message: alloc::format!("duplicate evidence variable `{}`", ev.variable()),
            });
        }
        evs.push(ev);
        if lx.peek() == Some(&Tok::Comma) {
            lx.next();
        } else {
            return Ok(Ket::Evidence(evs));
        }
    }
}

fn parse_ev(lx: &mut Lexer) -> Result<EventSet> {
    let variable = lx.name("an evidence variable")?;
    match lx.next() {
        Some(Tok::Eq) => {
            let state = lx.name("a state name")?;
            Ok(EventSet::point(&variable, &state))
        }
        Some(Tok::Name(kw)) if kw == "in" => {
            lx.expect(Tok::LBrace, "`{`")?;
            let mut states = Vec::new();
            loop {
                states.push(lx.name("a state name")?);
                match lx.next() {
                    Some(Tok::Comma) => continue,
                    Some(Tok::RBrace) => break,
                    _ => return lx.err("expected `,` or `}` in state set"),
                }
            }
            EventSet::new(variable, states)
        }
        _ => lx.err("expected `=` or `in` after evidence variable"),
    }
}

fn parse_expect(lx: &mut Lexer) -> Result<BracketExpression> {
    lx.expect(Tok::LBracket, "`[`")?;
    let function = lx.name("a function name")?;
    let mut evidence = Vec::new();
    if lx.peek() == Some(&Tok::Bar) {
        lx.next();
        match parse_ket(lx)? {
            Ket::Omega => {}
            Ket::Evidence(evs) => evidence = evs,
            Ket::Operator { .. } => {
                return lx.err("operator kets are not allowed in expectations")
            }
        }
    }
    lx.expect(Tok::RBracket, "`]`")?;
    Ok(BracketExpression::Expectation { function, evidence })
}

// ---------------------------------------------------------------------------
// Registry of named state functions
// ---------------------------------------------------------------------------

/// Named [`StateFunction`]s available to operator brackets and
/// expectations. A bare network-variable name resolves to the
/// state-index observable (state k maps to the value k) unless a
/// function of that name was registered explicitly.
#[derive(Debug, Clone, Default)]
pub struct FunctionRegistry {
    functions: alloc::collections::BTreeMap<String, StateFunction>,
}

impl FunctionRegistry {
    pub fn new() -> Self {
        FunctionRegistry::default()
    }

    pub fn register(&mut self, name: impl Into<String>, func: StateFunction) {
        self.functions.insert(name.into(), func);
    }

    pub fn resolve(&self, name: &str, net: &BayesianNetwork) -> Result<StateFunction> {
        if let Some(f) = self.functions.get(name) {
            return Ok(f.clone());
        }
        let var = net.variable(name).map_err(|_| Error::UnknownVariable {
            variable: name.to_string(),
        })?;
        Ok(StateFunction::state_index_values(var))
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Classifies an expression against the insertion and operator rules,
/// resolving function names against the default registry (bare network
/// variables only). Unresolved names are errors, not classifications.
pub fn validate(expr: &BracketExpression, net: &BayesianNetwork) -> Result<ValidityReport> {
    validate_with(expr, net, &FunctionRegistry::new())
}

/// [`validate`] with an explicit function registry.
pub fn validate_with(
    expr: &BracketExpression,
    net: &BayesianNetwork,
    funcs: &FunctionRegistry,
) -> Result<ValidityReport> {
    match expr {
        BracketExpression::Expectation { function, evidence } => {
            funcs.resolve(function, net)?;
            for ev in evidence {
                ev.check_against(net.variable(ev.variable())?)?;
            }
            Ok(ValidityReport::well_formed())
        }
        BracketExpression::Probability {
            targets,
            insertions,
            ket,
        } => {
            let mut bound = 0usize;
            for t in targets {
                let var = net.variable(t.variable())?;
                if let Target::Bound { state, .. } = t {
                    var.state_index(state)?;
                    bound += 1;
                }
            }
            let bra_vars: BTreeSet<&str> = targets.iter().map(Target::variable).collect();
            let ket_vars: BTreeSet<&str> = match ket {
                Ket::Omega => BTreeSet::new(),
                Ket::Evidence(evs) => {
                    for ev in evs {
                        ev.check_against(net.variable(ev.variable())?)?;
                    }
                    evs.iter().map(|ev| ev.variable()).collect()
                }
                Ket::Operator { function, event } => {
                    let func = funcs.resolve(function, net)?;
                    event.check_against(net.variable(event.variable())?)?;
                    if bound != targets.len() {
                        return Err(Error::Invalid {
                            reason: "operator brackets require fully bound targets".to_string(),
                        });
                    }
                    // the ket must fix the operator's variables to a single state
                    let fixes = func.variables() == [event.variable()]
                        && event.states().len() == 1;
                    if !fixes {
                        return Ok(ValidityReport {
                            validity: Validity::Meaningless {
                                function: function.clone(),
                            },
                            detail: alloc::format!(
                                "the ket does not fix the value of `{function}` and is not Omega"
                            ),
                        });
                    }
                    core::iter::once(event.variable()).collect()
                }
            };
            // free targets may not collide with evidence; bound targets may
            // (that is the same-domain Kronecker bracket)
            for t in targets {
                if matches!(t, Target::Free { .. }) && ket_vars.contains(t.variable()) {
                    return Err(Error::Invalid {
                        reason: alloc::format!(
                            "free target `{}` also appears in the ket",
                            t.variable()
                        ),
                    });
                }
            }
            for ins in insertions {
                for v in ins {
                    net.variable(v)?;
                }
                // unit operators may always be inserted against Omega;
                // a same-domain bracket only admits its own variables
                let same_domain = !matches!(ket, Ket::Omega) && bra_vars == ket_vars;
                let foreign = ins.iter().any(|v| {
                    !bra_vars.contains(v.as_str()) && !ket_vars.contains(v.as_str())
                });
                if same_domain && foreign {
                    return Ok(ValidityReport {
                        validity: Validity::InvalidInsertion {
                            operator: ins.clone(),
                        },
                        detail: alloc::format!(
                            "I_{{{}}} cannot enter a bracket whose bra and ket share the domain {{{}}}",
                            ins.join(","),
                            bra_vars.iter().copied().collect::<Vec<_>>().join(",")
                        ),
                    });
                }
            }
            Ok(ValidityReport::well_formed())
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Evaluates a query against the network. Ill-formed brackets are
/// rejected; see [`evaluate_forced`] for the diagnostic mode.
pub fn evaluate(
    expr: &BracketExpression,
    net: &BayesianNetwork,
    funcs: &FunctionRegistry,
) -> Result<QueryResult> {
    let report = validate_with(expr, net, funcs)?;
    if !report.is_well_formed() {
        return Err(Error::InvalidBracket(report));
    }
    evaluate_unchecked(expr, net, funcs, true)
}

/// Diagnostic evaluation: ill-formed brackets are evaluated literally
/// (the insertion expansion is taken at face value) and returned with
/// their validity classification.
pub fn evaluate_forced(
    expr: &BracketExpression,
    net: &BayesianNetwork,
    funcs: &FunctionRegistry,
) -> Result<(QueryResult, ValidityReport)> {
    let report = validate_with(expr, net, funcs)?;
    let check = report.is_well_formed();
    let result = evaluate_unchecked(expr, net, funcs, check)?;
    Ok((result, report))
}

fn evaluate_unchecked(
    expr: &BracketExpression,
    net: &BayesianNetwork,
    funcs: &FunctionRegistry,
    check_insertions: bool,
) -> Result<QueryResult> {
    let joint = net.joint_distribution()?;
    match expr {
        BracketExpression::Expectation { function, evidence } => {
            let func = funcs.resolve(function, net)?;
            Ok(QueryResult::Scalar(joint.expectation(&func, evidence)?))
        }
        BracketExpression::Probability {
            targets,
            insertions,
            ket,
        } => {
            let (evidence, op_scale) = match ket {
                Ket::Omega => (Vec::new(), None),
                Ket::Evidence(evs) => (evs.clone(), None),
                Ket::Operator { function, event } => {
                    let func = funcs.resolve(function, net)?;
                    let mut a = Assignment::new();
                    a.bind(event.variable(), event.states()[0].as_str())?;
                    let scale = func.value(&a)?;
                    (alloc::vec![event.clone()], Some(scale))
                }
            };

            let free: Vec<&str> = targets
                .iter()
                .filter_map(|t| match t {
                    Target::Free { variable } => Some(variable.as_str()),
                    Target::Bound { .. } => None,
                })
                .collect();

            let direct = if free.is_empty() {
                let bound_events: Vec<EventSet> = targets
                    .iter()
                    .map(|t| match t {
                        Target::Bound { variable, state } => EventSet::point(variable, state),
                        Target::Free { .. } => unreachable!(),
                    })
                    .collect();
                Direct::Scalar(conditional_mass(&joint, &bound_events, &evidence)?)
            } else {
                Direct::Table(joint.condition(&evidence, &free)?)
            };

            let result = if insertions.is_empty() {
                direct
            } else {
                let expanded = expand_insertions(&joint, targets, insertions, &evidence)?;
                if check_insertions {
                    direct.check_agreement(&expanded)?;
                }
                expanded
            };

            match (result, op_scale) {
                (Direct::Scalar(v), Some(scale)) => Ok(QueryResult::Scalar(scale * v)),
                (Direct::Scalar(v), None) => Ok(QueryResult::Scalar(v)),
                (Direct::Table(t), None) => Ok(QueryResult::Table(t)),
                (Direct::Table(_), Some(_)) => unreachable!("operator kets require bound targets"),
            }
        }
    }
}

enum Direct {
    Scalar(f64),
    Table(Factor),
}

impl Direct {
    fn check_agreement(&self, other: &Direct) -> Result<()> {
        match (self, other) {
            (Direct::Scalar(a), Direct::Scalar(b)) => {
                if (a - b).abs() > INSERTION_TOL {
                    return Err(Error::InsertionMismatch {
                        direct: *a,
                        expanded: *b,
                    });
                }
                Ok(())
            }
            (Direct::Table(a), Direct::Table(b)) => {
                let names: Vec<&str> = a.scope().iter().map(Variable::name).collect();
                let b = b.reorder(&names)?;
                for (&x, &y) in a.values().iter().zip(b.values()) {
                    if (x - y).abs() > INSERTION_TOL {
                        return Err(Error::InsertionMismatch {
                            direct: x,
                            expanded: y,
                        });
                    }
                }
                Ok(())
            }
            _ => Err(Error::Invalid {
                reason: "insertion expansion changed the result shape".to_string(),
            }),
        }
    }
}

/// P(events ∧ evidence) / P(evidence), by restriction over the joint.
/// Handles bras and kets over the same variable (the Kronecker case)
/// by intersecting the event sets.
fn conditional_mass(joint: &Factor, events: &[EventSet], evidence: &[EventSet]) -> Result<f64> {
    let denom = joint.restrict(evidence)?.total();
    if denom.is_nan() || denom <= 0.0 {
        return Err(Error::ImpossibleEvidence);
    }
    let both: Vec<EventSet> = evidence.iter().chain(events).cloned().collect();
    let num = joint.restrict(&both)?.total();
    Ok(num / denom)
}

/// Expands `P(A | I_{V1} | ... | I_{Vk} | ket)` as the literal chain
/// `Σ P(A|v1) P(v1|v2) ... P(vk|ket)`, one sum per unit operator.
fn expand_insertions(
    joint: &Factor,
    targets: &[Target],
    insertions: &[Vec<String>],
    evidence: &[EventSet],
) -> Result<Direct> {
    let free: Vec<&str> = targets
        .iter()
        .filter_map(|t| match t {
            Target::Free { variable } => Some(variable.as_str()),
            Target::Bound { .. } => None,
        })
        .collect();

    if free.is_empty() {
        let bra: Vec<EventSet> = targets
            .iter()
            .map(|t| match t {
                Target::Bound { variable, state } => EventSet::point(variable, state),
                Target::Free { .. } => unreachable!(),
            })
            .collect();
        return Ok(Direct::Scalar(expand_scalar(
            joint, &bra, insertions, evidence,
        )?));
    }

    // tabulate the expansion per assignment of the free targets, then
    // renormalize exactly as the direct conditional does
    let scope: Vec<Variable> = free
        .iter()
        .map(|n| joint.variable(n).cloned())
        .collect::<Result<_>>()?;
    let template = Factor::new(scope.clone(), alloc::vec![0.0; scope.iter().map(Variable::cardinality).product()])?;
    let mut values = Vec::with_capacity(template.values().len());
    for (assignment, _) in template.cells() {
        let mut bra: Vec<EventSet> = assignment.to_events();
        for t in targets {
            if let Target::Bound { variable, state } = t {
                bra.push(EventSet::point(variable, state));
            }
        }
        values.push(expand_scalar(joint, &bra, insertions, evidence)?);
    }
    let table = Factor::new(scope, values)?.normalize()?;
    Ok(Direct::Table(table))
}

fn expand_scalar(
    joint: &Factor,
    bra: &[EventSet],
    insertions: &[Vec<String>],
    evidence: &[EventSet],
) -> Result<f64> {
    match insertions.split_first() {
        None => conditional_mass(joint, bra, evidence),
        Some((first, rest)) => {
            let scope: Vec<Variable> = first
                .iter()
                .map(|n| joint.variable(n).cloned())
                .collect::<Result<_>>()?;
            let n: usize = scope.iter().map(Variable::cardinality).product();
            let walker = Factor::new(scope, alloc::vec![0.0; n])?;
            let mut acc = 0.0;
            for (assignment, _) in walker.cells() {
                let mid = assignment.to_events();
                // weight P(mid | rest-of-chain | ket); skip zero-weight terms
                let weight = expand_scalar(joint, &mid, rest, evidence)?;
                if weight == 0.0 {
                    continue;
                }
                acc += conditional_mass(joint, bra, &mid)? * weight;
            }
            Ok(acc)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayesnet::{intelligence_sat_network, student_network};

    fn eval(text: &str) -> QueryResult {
        let net = student_network();
        evaluate(&parse_query(text).unwrap(), &net, &FunctionRegistry::new()).unwrap()
    }

    #[test]
    fn parse_conditional_scalar() {
        let expr = parse_query("P(L=l1 | I=i0, D=d0)").unwrap();
        match &expr {
            BracketExpression::Probability {
                targets,
                insertions,
                ket,
            } => {
                assert_eq!(
                    targets[0],
                    Target::Bound {
                        variable: "L".into(),
                        state: "l1".into()
                    }
                );
                assert!(insertions.is_empty());
                assert_eq!(
                    ket,
                    &Ket::Evidence(alloc::vec![
                        EventSet::point("I", "i0"),
                        EventSet::point("D", "d0")
                    ])
                );
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn parse_free_marginal_defaults_to_omega() {
        let expr = parse_query("P(G)").unwrap();
        match &expr {
            BracketExpression::Probability { targets, ket, .. } => {
                assert_eq!(targets[0], Target::Free { variable: "G".into() });
                assert_eq!(ket, &Ket::Omega);
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn parse_insertion_before_omega() {
        let expr = parse_query("P(S | [I] | Omega)").unwrap();
        match &expr {
            BracketExpression::Probability { insertions, ket, .. } => {
                assert_eq!(insertions, &alloc::vec![alloc::vec!["I".to_string()]]);
                assert_eq!(ket, &Ket::Omega);
            }
            _ => panic!("wrong kind"),
        }
        assert_eq!(expr.kind(), BracketKind::Probability);
    }

    #[test]
    fn parse_errors_carry_offsets() {
        match parse_query("P(G=") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(parse_query(""), Err(Error::Parse { .. })));
        assert!(matches!(parse_query("P(G, G)"), Err(Error::Parse { .. })));
        assert!(matches!(parse_query("P(G) extra"), Err(Error::Parse { .. })));
        assert!(matches!(parse_query("Q(G)"), Err(Error::Parse { .. })));
    }

    #[test]
    fn print_parse_round_trip() {
        let samples = [
            "P(G)",
            "P(L=l1 | I=i0, D=d0)",
            "P(S | [I] | Omega)",
            "P(G | [I,D] | Omega)",
            "P(I=i0 | [S] | I=i1)",
            "P(I=i0 | S | S=s1)",
            "P(L | D in {d0,d1}, I=i0)",
            "E[G]",
            "E[G | I=i0]",
        ];
        for text in samples {
            let expr = parse_query(text).unwrap();
            let printed = alloc::format!("{expr}");
            let reparsed = parse_query(&printed).unwrap();
            assert_eq!(expr, reparsed, "round-trip failed for `{text}` -> `{printed}`");
        }
    }

    #[test]
    fn validity_classifications() {
        let net = student_network();
        let check = |text: &str| validate(&parse_query(text).unwrap(), &net).unwrap();
        assert!(check("P(S=s1 | [I] | Omega)").is_well_formed());
        assert!(matches!(
            check("P(I=i0 | [S] | I=i1)").validity,
            Validity::InvalidInsertion { .. }
        ));
        assert!(matches!(
            check("P(I=i0 | S | I=i1)").validity,
            Validity::Meaningless { .. }
        ));
        assert!(check("P(I=i0 | S | S=s1)").is_well_formed());
        // unresolved names are errors, not classifications
        assert!(validate(&parse_query("P(Q=q0)").unwrap(), &net).is_err());
        assert!(validate(&parse_query("P(I=i7)").unwrap(), &net).is_err());
    }

    #[test]
    fn evaluate_student_scalars() {
        assert!((eval("P(G=g1)").as_scalar().unwrap() - 0.362).abs() < 5e-4);
        assert!((eval("P(S=s1 | [I] | Omega)").as_scalar().unwrap() - 0.275).abs() < 5e-4);
        assert!(
            (eval("P(S=s1 | [I] | Omega)").as_scalar().unwrap()
                - eval("P(S=s1)").as_scalar().unwrap())
            .abs()
                < 1e-12
        );
    }

    #[test]
    fn evaluate_joint_insertion() {
        // P(g | I_{I,D} | Omega) equals P(g) directly
        let direct = eval("P(G=g1)").as_scalar().unwrap();
        let inserted = eval("P(G=g1 | [I,D] | Omega)").as_scalar().unwrap();
        assert!((direct - inserted).abs() < 1e-12);
    }

    #[test]
    fn chained_insertions_agree() {
        let direct = eval("P(L=l1)").as_scalar().unwrap();
        let chained = eval("P(L=l1 | [G] | [I,D] | Omega)").as_scalar().unwrap();
        assert!((direct - chained).abs() < 1e-9);
    }

    #[test]
    fn free_target_with_insertion_matches_direct_table() {
        let direct = eval("P(G)");
        let inserted = eval("P(G | [I,D] | Omega)");
        let a = direct.as_table().unwrap();
        let b = inserted.as_table().unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn same_domain_bracket_is_kronecker() {
        let net = intelligence_sat_network();
        let funcs = FunctionRegistry::new();
        let same = evaluate(&parse_query("P(I=i0 | I=i0)").unwrap(), &net, &funcs).unwrap();
        assert!((same.as_scalar().unwrap() - 1.0).abs() < 1e-12);
        let diff = evaluate(&parse_query("P(I=i0 | I=i1)").unwrap(), &net, &funcs).unwrap();
        assert!(diff.as_scalar().unwrap().abs() < 1e-12);
    }

    /// The forced diagnostic value of P(i0 | I_S | i0) is about 0.8775,
    /// far from the direct Kronecker value 1 — which is exactly why a
    /// same-domain insertion with a fixed ket is classified invalid.
    #[test]
    fn forced_invalid_insertion_diagnostic() {
        let net = intelligence_sat_network();
        let funcs = FunctionRegistry::new();
        let expr = parse_query("P(I=i0 | [S] | I=i0)").unwrap();
        assert!(evaluate(&expr, &net, &funcs).is_err());
        let (result, report) = evaluate_forced(&expr, &net, &funcs).unwrap();
        assert!(matches!(report.validity, Validity::InvalidInsertion { .. }));
        let v = result.as_scalar().unwrap();
        assert!((v - 0.8775).abs() < 1e-3, "got {v}");
        assert!((v - 1.0).abs() > 0.01);

        let expr = parse_query("P(I=i0 | [S] | I=i1)").unwrap();
        let (result, _) = evaluate_forced(&expr, &net, &funcs).unwrap();
        assert!(result.as_scalar().unwrap() > 0.0);
    }

    #[test]
    fn operator_bracket_scales_by_state_value() {
        let net = student_network();
        let mut funcs = FunctionRegistry::new();
        // explicit observable: SAT scores 400 / 800
        let sat = net.variable("S").unwrap();
        let table = [("s0", 400.0), ("s1", 800.0)]
            .iter()
            .map(|(s, v)| (alloc::vec![s.to_string()], *v))
            .collect();
        funcs.register("Score", StateFunction::new(core::slice::from_ref(sat), table).unwrap());

        let expr = parse_query("P(I=i0 | Score | S=s1)").unwrap();
        let (result, report) = evaluate_forced(&expr, &net, &funcs).unwrap();
        assert!(report.is_well_formed());
        let direct = eval("P(I=i0 | S=s1)").as_scalar().unwrap();
        assert!((result.as_scalar().unwrap() - 800.0 * direct).abs() < 1e-9);

        // default observable: state index
        let expr = parse_query("P(I=i0 | S | S=s1)").unwrap();
        let v = evaluate(&expr, &net, &funcs).unwrap().as_scalar().unwrap();
        assert!((v - 1.0 * direct).abs() < 1e-12);
    }

    #[test]
    fn expectations() {
        let net = student_network();
        let mut funcs = FunctionRegistry::new();
        funcs.register(
            "IndI1",
            StateFunction::indicator(net.variable("I").unwrap(), "i1").unwrap(),
        );
        let e = evaluate(&parse_query("E[IndI1]").unwrap(), &net, &funcs).unwrap();
        assert!((e.as_scalar().unwrap() - 0.3).abs() < 1e-12);

        let one = StateFunction::one(&[net.variable("G").unwrap().clone()]);
        funcs.register("One", one);
        let e = evaluate(&parse_query("E[One | I=i0]").unwrap(), &net, &funcs).unwrap();
        assert!((e.as_scalar().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn table_results_normalize_per_evidence() {
        let t = eval("P(G | I=i0)");
        let table = t.as_table().unwrap();
        assert!((table.total() - 1.0).abs() < 1e-9);
        assert!((table.values()[0] - 0.20).abs() < 5e-4);
    }

    #[test]
    fn cp_normalization_over_all_single_variable_conditionals() {
        // for every variable X and point evidence e on any other
        // variable, the conditional table sums to 1
        let net = student_network();
        let funcs = FunctionRegistry::new();
        for x in net.variables() {
            for e in net.variables() {
                if e.name() == x.name() {
                    continue;
                }
                for state in e.states() {
                    let text = alloc::format!("P({} | {}={})", x.name(), e.name(), state);
                    let r = evaluate(&parse_query(&text).unwrap(), &net, &funcs).unwrap();
                    assert!((r.as_table().unwrap().total() - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}
