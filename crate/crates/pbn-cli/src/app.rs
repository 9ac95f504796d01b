//! The `pbn` command-line application: validation, querying,
//! independence analysis, axiom testing and format conversion over
//! networks loaded from files or the built-in Student fixture.
//!
//! Exit codes: 0 success, 1 usage or syntax error, 2 semantic or
//! validation error, 3 impossible evidence, 4 resource cap exceeded.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pbn_core::bayesnet::{student_network, BayesianNetwork, CIStatement};
use pbn_core::bracket::{
    evaluate, evaluate_forced, parse_query, BracketExpression, FunctionRegistry, Ket, QueryResult,
    Target,
};
use pbn_core::ci::{
    axiom_suite, check_variable_ci, constructed_ci_distribution, random_distribution,
    verify_local_independencies, Axiom, AxiomOutcome, AxiomPartition,
};
use pbn_core::factor::Factor;
use pbn_core::inference::{query_variable_elimination, InferenceTask, Method};
use pbn_core::variable::Variable;
use pbn_core::Error as CoreError;

use crate::document::{FormatError, Parsed};
use crate::{elvira, native};

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SEMANTIC: i32 = 2;
pub const EXIT_IMPOSSIBLE: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "pbn",
    version,
    about = "Exact inference for discrete Bayesian networks in probability bracket notation",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

/// Positional operands shared by the network-consuming subcommands:
/// the first operand is a network file (`.elv` Elvira subset or
/// `.bn.json` native format) unless `--builtin` supplies the source.
#[derive(Args, Debug)]
struct SourceArgs {
    /// [FILE] then the subcommand's own operands.
    #[arg(value_name = "ARG")]
    args: Vec<String>,
    /// Use a built-in fixture instead of a file (available: student).
    #[arg(long, value_name = "NAME")]
    builtin: Option<String>,
}

#[derive(Debug)]
enum Source {
    File(PathBuf),
    Builtin(String),
}

impl SourceArgs {
    /// Splits the operands into the network source and the
    /// subcommand's remaining operands, which must match `expected`.
    fn resolve(self, expected: &[&str]) -> Result<(Source, Vec<String>), Failure> {
        let mut rest = self.args;
        let src = match self.builtin {
            Some(name) => Source::Builtin(name),
            None if !rest.is_empty() => Source::File(PathBuf::from(rest.remove(0))),
            None => {
                return Err(Failure::new(
                    EXIT_USAGE,
                    "a network source is required: FILE or --builtin NAME",
                ))
            }
        };
        if rest.len() != expected.len() {
            return Err(Failure::new(
                EXIT_USAGE,
                format!(
                    "expected operands: [FILE] {}, got {} extra operand(s)",
                    expected.join(" "),
                    rest.len()
                ),
            ));
        }
        Ok((src, rest))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    /// Full-joint enumeration (the oracle).
    Enum,
    /// Variable elimination with a greedy min-degree order.
    Ve,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Elvira,
    Native,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Check a network file: acyclicity, CPT row normalization, scopes.
    Validate {
        #[command(flatten)]
        src: SourceArgs,
    },
    /// Evaluate a bracket query such as "P(I=i1 | G=g3)" or "E[S]".
    /// Operands: [FILE] EXPR.
    Query {
        #[command(flatten)]
        src: SourceArgs,
        #[arg(long, value_enum, default_value_t = MethodArg::Enum)]
        method: MethodArg,
        /// Evaluate ill-formed brackets anyway, printing the diagnosis.
        #[arg(long)]
        force: bool,
        /// Decimal places in printed probabilities.
        #[arg(long, default_value_t = 4)]
        precision: usize,
        /// Tab-separated output: state-label header, one value row.
        #[arg(long)]
        tsv: bool,
    },
    /// Print the full joint probability table.
    Joint {
        #[command(flatten)]
        src: SourceArgs,
        #[arg(long, default_value_t = 4)]
        precision: usize,
        #[arg(long)]
        tsv: bool,
    },
    /// List each node's local independence statement and verify it.
    Independencies {
        #[command(flatten)]
        src: SourceArgs,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// Test one conditional-independence statement, e.g. "D,I | G".
    /// Operands: [FILE] STATEMENT.
    CiCheck {
        #[command(flatten)]
        src: SourceArgs,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// Run the independence-axiom suite on random distributions.
    Axioms {
        /// Number of variables (2..=8).
        #[arg(long, default_value_t = 4)]
        vars: usize,
        /// States per variable.
        #[arg(long, default_value_t = 2)]
        card: usize,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Draw strictly positive distributions.
        #[arg(long)]
        positive: bool,
        /// Draw distributions whose construction makes the axiom
        /// antecedents hold, so no trial is vacuous.
        #[arg(long)]
        constructed: bool,
    },
    /// Convert a network between the Elvira and native formats.
    /// Operands: [FILE] OUT.
    Convert {
        #[command(flatten)]
        src: SourceArgs,
        #[arg(long, value_enum)]
        to: FormatArg,
    },
}

/// A command failure carrying its exit code and message.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        let code = match e {
            FormatError::Syntax { .. } => EXIT_USAGE,
            FormatError::Schema { .. } | FormatError::Document { .. } => EXIT_SEMANTIC,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::Parse { .. } => EXIT_USAGE,
            CoreError::ImpossibleEvidence | CoreError::ZeroMass => EXIT_IMPOSSIBLE,
            CoreError::ResourceCap { .. } => EXIT_RESOURCE,
            _ => EXIT_SEMANTIC,
        };
        Failure::new(code, e.to_string())
    }
}

/// Runs the application. `out` receives data, `err` receives warnings
/// and error messages; the return value is the process exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_SUCCESS };
            let stream: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(stream, "{e}");
            return code;
        }
    };
    match dispatch(cli.cmd, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cmd: Cmd, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    match cmd {
        Cmd::Validate { src } => {
            let (src, _) = src.resolve(&[])?;
            cmd_validate(&src, out, err)
        }
        Cmd::Query {
            src,
            method,
            force,
            precision,
            tsv,
        } => {
            let (src, ops) = src.resolve(&["EXPR"])?;
            cmd_query(&src, &ops[0], method, force, precision, tsv, out, err)
        }
        Cmd::Joint {
            src,
            precision,
            tsv,
        } => {
            let (src, _) = src.resolve(&[])?;
            cmd_joint(&src, precision, tsv, out, err)
        }
        Cmd::Independencies { src, tolerance } => {
            let (src, _) = src.resolve(&[])?;
            cmd_independencies(&src, tolerance, out, err)
        }
        Cmd::CiCheck { src, tolerance } => {
            let (src, ops) = src.resolve(&["STATEMENT"])?;
            cmd_ci_check(&src, &ops[0], tolerance, out, err)
        }
        Cmd::Axioms {
            vars,
            card,
            trials,
            seed,
            positive,
            constructed,
        } => cmd_axioms(vars, card, trials, seed, positive, constructed, out),
        Cmd::Convert { src, to } => {
            let (src, ops) = src.resolve(&["OUT"])?;
            cmd_convert(&src, to, Path::new(&ops[0]), out, err)
        }
    }
}

// ---------------------------------------------------------------------------
// Network loading
// ---------------------------------------------------------------------------

fn detect_format(path: &Path, text: &str) -> FormatArg {
    let name = path.to_string_lossy().to_lowercase();
    if name.ends_with(".elv") {
        FormatArg::Elvira
    } else if name.ends_with(".json") || text.trim_start().starts_with('{') {
        FormatArg::Native
    } else {
        FormatArg::Elvira
    }
}

fn load(src: &Source, err: &mut dyn Write) -> Result<Parsed, Failure> {
    let parsed = match src {
        Source::Builtin(name) => {
            if name != "student" {
                return Err(Failure::new(
                    EXIT_USAGE,
                    format!("unknown builtin `{name}` (available: student)"),
                ));
            }
            Parsed {
                name: "Student".to_string(),
                network: student_network(),
                warnings: Vec::new(),
            }
        }
        Source::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::new(EXIT_SEMANTIC, format!("cannot read {}: {e}", path.display()))
            })?;
            match detect_format(path, &text) {
                FormatArg::Elvira => elvira::parse_elvira(&text)?,
                FormatArg::Native => native::parse_native(&text)?,
            }
        }
    };
    for w in &parsed.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    Ok(parsed)
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

fn write_table(
    out: &mut dyn Write,
    table: &Factor,
    precision: usize,
    tsv: bool,
) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::new(EXIT_SEMANTIC, e.to_string());
    if tsv {
        // header of state labels, one probability row
        let mut header = Vec::new();
        let mut row = Vec::new();
        for (assignment, value) in table.cells() {
            let label: Vec<&str> = assignment.iter().map(|(_, s)| s).collect();
            header.push(label.join(","));
            row.push(format!("{value:.precision$}"));
        }
        writeln!(out, "{}", header.join("\t")).map_err(io)?;
        writeln!(out, "{}", row.join("\t")).map_err(io)?;
    } else {
        let names: Vec<&str> = table.scope().iter().map(Variable::name).collect();
        writeln!(out, "{}\tP", names.join("\t")).map_err(io)?;
        for (assignment, value) in table.cells() {
            let states: Vec<String> = names
                .iter()
                .map(|n| assignment.get(n).unwrap_or("?").to_string())
                .collect();
            writeln!(out, "{}\t{value:.precision$}", states.join("\t")).map_err(io)?;
        }
    }
    Ok(())
}

fn write_result(
    out: &mut dyn Write,
    result: &QueryResult,
    precision: usize,
    tsv: bool,
) -> Result<(), Failure> {
    match result {
        QueryResult::Scalar(v) => {
            writeln!(out, "{v:.precision$}").map_err(|e| Failure::new(EXIT_SEMANTIC, e.to_string()))
        }
        QueryResult::Table(t) => write_table(out, t, precision, tsv),
    }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_validate(src: &Source, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    // parsing already rejects invalid networks; report the stats
    let parsed = load(src, err)?;
    let report = parsed.network.validate();
    let _ = writeln!(out, "network: {}", parsed.name);
    let _ = writeln!(out, "nodes: {}", report.node_count);
    let _ = writeln!(out, "cpt rows: {}", report.cpt_row_count);
    for v in &report.violations {
        let _ = writeln!(out, "violation: {v}");
    }
    if report.is_valid() {
        let _ = writeln!(out, "valid");
        Ok(EXIT_SUCCESS)
    } else {
        let _ = writeln!(out, "invalid");
        Ok(EXIT_SEMANTIC)
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_query(
    src: &Source,
    expr: &str,
    method: MethodArg,
    force: bool,
    precision: usize,
    tsv: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let parsed = load(src, err)?;
    let net = &parsed.network;
    let query = parse_query(expr)?;
    let funcs = FunctionRegistry::new();
    let result = if force {
        let (result, report) = evaluate_forced(&query, net, &funcs)?;
        let _ = writeln!(out, "validity: {report}");
        result
    } else if method == MethodArg::Ve {
        match ve_result(net, &query) {
            Some(result) => result?,
            None => evaluate(&query, net, &funcs)?,
        }
    } else {
        evaluate(&query, net, &funcs)?
    };
    write_result(out, &result, precision, tsv)?;
    Ok(EXIT_SUCCESS)
}

/// Answers a plain probability query by variable elimination. Returns
/// `None` for query shapes (insertions, operator kets, targets that
/// overlap the evidence) that the enumeration evaluator handles.
fn ve_result(
    net: &BayesianNetwork,
    query: &BracketExpression,
) -> Option<Result<QueryResult, Failure>> {
    let BracketExpression::Probability {
        targets,
        insertions,
        ket,
    } = query
    else {
        return None;
    };
    if !insertions.is_empty() {
        return None;
    }
    let evidence = match ket {
        Ket::Omega => Vec::new(),
        Ket::Evidence(evs) => evs.clone(),
        Ket::Operator { .. } => return None,
    };
    let target_vars: Vec<&str> = targets.iter().map(Target::variable).collect();
    if evidence
        .iter()
        .any(|ev| target_vars.contains(&ev.variable()))
    {
        return None;
    }
    let all_bound = targets
        .iter()
        .all(|t| matches!(t, Target::Bound { .. }));
    let all_free = targets.iter().all(|t| matches!(t, Target::Free { .. }));
    if !(all_bound || all_free) {
        return None;
    }
    let run = || -> Result<QueryResult, Failure> {
        let task = InferenceTask::new(&target_vars, evidence, Method::VariableElimination)?;
        let table = query_variable_elimination(net, &task)?;
        let table = table.reorder(&target_vars)?;
        if all_bound {
            let mut assignment = pbn_core::variable::Assignment::new();
            for t in targets {
                if let Target::Bound { variable, state } = t {
                    assignment.bind(variable.clone(), state.clone())?;
                }
            }
            Ok(QueryResult::Scalar(table.value_at(&assignment)?))
        } else {
            Ok(QueryResult::Table(table))
        }
    };
    Some(run())
}

fn cmd_joint(
    src: &Source,
    precision: usize,
    tsv: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let parsed = load(src, err)?;
    let net = &parsed.network;
    let order: Vec<&str> = net.variables().iter().map(Variable::name).collect();
    let joint = net.joint_distribution()?.reorder(&order)?;
    write_table(out, &joint, precision, tsv)?;
    Ok(EXIT_SUCCESS)
}

fn cmd_independencies(
    src: &Source,
    tolerance: f64,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let parsed = load(src, err)?;
    let reports = verify_local_independencies(&parsed.network, tolerance)?;
    let mut all_hold = true;
    for report in &reports {
        let verdict = if report.holds { "holds" } else { "VIOLATED" };
        all_hold &= report.holds;
        let _ = writeln!(
            out,
            "{}\tmax-deviation {:.3e}\t{verdict}",
            report.statement, report.max_deviation
        );
    }
    Ok(if all_hold { EXIT_SUCCESS } else { EXIT_SEMANTIC })
}

/// Parses "X,Y | Z" into a CI statement; each of the three parts is a
/// whitespace-separated name list, Z optional.
fn parse_ci_statement(text: &str) -> Result<CIStatement, Failure> {
    let usage = || {
        Failure::new(
            EXIT_USAGE,
            format!("cannot parse `{text}`: expected \"X,Y | Z\" (Z optional)"),
        )
    };
    let (left, given) = match text.split_once('|') {
        Some((l, g)) => (l, g),
        None => (text, ""),
    };
    let (x, y) = left.split_once(',').ok_or_else(usage)?;
    let names = |part: &str| -> Vec<String> {
        part.split_whitespace().map(str::to_string).collect()
    };
    let (x, y, z) = (names(x), names(y), names(given));
    if x.is_empty() || y.is_empty() {
        return Err(usage());
    }
    Ok(CIStatement::new(x, y, z)?)
}

fn cmd_ci_check(
    src: &Source,
    statement: &str,
    tolerance: f64,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let parsed = load(src, err)?;
    let stmt = parse_ci_statement(statement)?;
    let joint = parsed.network.joint_distribution()?;
    let report = check_variable_ci(&joint, &stmt, tolerance)?;
    let _ = writeln!(out, "statement: {}", report.statement);
    let _ = writeln!(out, "holds: {}", report.holds);
    let _ = writeln!(out, "max-deviation: {:.3e}", report.max_deviation);
    if let Some(witness) = &report.witness {
        let cells: Vec<String> = witness.iter().map(|(v, s)| format!("{v}={s}")).collect();
        let _ = writeln!(out, "witness: {}", cells.join(", "));
    }
    Ok(EXIT_SUCCESS)
}

fn cmd_axioms(
    var_count: usize,
    card: usize,
    trials: u64,
    seed: u64,
    positive: bool,
    constructed: bool,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    if !(2..=8).contains(&var_count) {
        return Err(Failure::new(EXIT_USAGE, "--vars must be in 2..=8"));
    }
    if card < 2 {
        return Err(Failure::new(EXIT_USAGE, "--card must be at least 2"));
    }
    let vars: Vec<Variable> = (0..var_count)
        .map(|i| {
            let name = char::from(b'A' + i as u8).to_string();
            Variable::new(name, (0..card).map(|s| format!("s{s}"))).expect("valid variable")
        })
        .collect();
    // x = first, y = second, remainder split between z and w
    let rest = &vars[2..];
    let half = rest.len().div_ceil(2);
    let (z_vars, w_vars) = rest.split_at(half);
    let name_of = |v: &Variable| v.name().to_string();
    let x: Vec<String> = vec![name_of(&vars[0])];
    let y: Vec<String> = vec![name_of(&vars[1])];
    let z: Vec<String> = z_vars.iter().map(name_of).collect();
    let w: Vec<String> = w_vars.iter().map(name_of).collect();
    fn as_strs(v: &[String]) -> Vec<&str> {
        v.iter().map(String::as_str).collect()
    }
    let partition = AxiomPartition::new(&as_strs(&x), &as_strs(&y), &as_strs(&z), &as_strs(&w))?;

    let mut non_vacuous = vec![0u64; Axiom::ALL.len()];
    let mut holds = vec![0u64; Axiom::ALL.len()];
    let mut violated = vec![0u64; Axiom::ALL.len()];
    let mut counterexamples = vec![0u64; Axiom::ALL.len()];
    for t in 0..trials {
        let dist = if constructed {
            constructed_ci_distribution(
                &vars[0..1],
                &vars[1..2],
                z_vars,
                w_vars,
                seed.wrapping_add(t),
            )?
        } else {
            random_distribution(&vars, seed.wrapping_add(t), positive)?
        };
        let report = axiom_suite(&dist, &partition, 1e-9)?;
        for (axiom, outcome) in &report.results {
            let i = Axiom::ALL.iter().position(|a| a == axiom).expect("known");
            match outcome {
                AxiomOutcome::Vacuous => {}
                AxiomOutcome::Holds => {
                    non_vacuous[i] += 1;
                    holds[i] += 1;
                }
                AxiomOutcome::Violated { .. } => {
                    non_vacuous[i] += 1;
                    violated[i] += 1;
                }
                AxiomOutcome::PositivityCounterexample { .. } => {
                    non_vacuous[i] += 1;
                    counterexamples[i] += 1;
                }
            }
        }
    }
    let _ = writeln!(
        out,
        "axiom\ttrials\tnon-vacuous\tholds\tviolations\tpositivity-counterexamples"
    );
    let mut any_violation = false;
    for (i, axiom) in Axiom::ALL.iter().enumerate() {
        any_violation |= violated[i] > 0;
        let _ = writeln!(
            out,
            "{}\t{trials}\t{}\t{}\t{}\t{}",
            axiom.name(),
            non_vacuous[i],
            holds[i],
            violated[i],
            counterexamples[i]
        );
    }
    Ok(if any_violation {
        EXIT_SEMANTIC
    } else {
        EXIT_SUCCESS
    })
}

fn cmd_convert(
    src: &Source,
    to: FormatArg,
    path: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let parsed = load(src, err)?;
    let text = match to {
        FormatArg::Elvira => elvira::write_elvira(&parsed.name, &parsed.network),
        FormatArg::Native => native::write_native(&parsed.name, &parsed.network),
    };
    std::fs::write(path, text).map_err(|e| {
        Failure::new(EXIT_SEMANTIC, format!("cannot write {}: {e}", path.display()))
    })?;
    let _ = writeln!(out, "wrote {}", path.display());
    Ok(EXIT_SUCCESS)
}
