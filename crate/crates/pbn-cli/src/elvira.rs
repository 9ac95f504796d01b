//! Reader and writer for a documented subset of the Elvira network
//! format.
//!
//! Grammar (comments `//` run to end of line):
//!
//! ```text
//! document := "bnet" STRING "{" item* "}"
//! item     := node | link | relation
//! node     := "node" NAME "(finite-states)" "{" "states" "=" "(" NAME+ ")" ";" "}"
//! link     := "link" NAME NAME ";"                            // parent child
//! relation := "relation" NAME "{" "values" "=" "table" "(" NUMBER+ ")" ";" "}"
//! ```
//!
//! Relation values are row-major over (parents in link-declaration
//! order, node states fastest). Unrecognized `name = ...;` fields in
//! any block are skipped with a warning, so cosmetic metadata (titles,
//! comments, coordinates) does not break parsing.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use pbn_core::bayesnet::BayesianNetwork;

use crate::document::{FormatError, NetworkDocument, NodeDecl, Parsed};

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Ident(String),
    Str(String),
    Num(f64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Eq,
    Eof,
}

impl TokKind {
    fn describe(&self) -> String {
        match self {
            TokKind::Ident(s) => format!("`{s}`"),
            TokKind::Str(s) => format!("string \"{s}\""),
            TokKind::Num(n) => format!("number {n}"),
            TokKind::LBrace => "`{`".into(),
            TokKind::RBrace => "`}`".into(),
            TokKind::LParen => "`(`".into(),
            TokKind::RParen => "`)`".into(),
            TokKind::Semi => "`;`".into(),
            TokKind::Eq => "`=`".into(),
            TokKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Tok {
    kind: TokKind,
    line: usize,
    column: usize,
}

fn syntax(tok: &Tok, message: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line: tok.line,
        column: tok.column,
        message: message.into(),
    }
}

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_name_part(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-' || c == '.'
}

fn lex(text: &str) -> Result<Vec<Tok>, FormatError> {
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut column = 1usize;
    let mut chars = text.chars().peekable();
    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                column = 1;
            } else if c.is_some() {
                column += 1;
            }
            c
        }};
    }
    loop {
        let (l, c) = (line, column);
        let Some(&ch) = chars.peek() else {
            toks.push(Tok {
                kind: TokKind::Eof,
                line: l,
                column: c,
            });
            return Ok(toks);
        };
        if ch.is_whitespace() {
            bump!();
            continue;
        }
        if ch == '/' {
            bump!();
            if chars.peek() == Some(&'/') {
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    bump!();
                }
                continue;
            }
            return Err(FormatError::Syntax {
                line: l,
                column: c,
                message: "stray `/` (comments start with `//`)".into(),
            });
        }
        let simple = match ch {
            '{' => Some(TokKind::LBrace),
            '}' => Some(TokKind::RBrace),
            '(' => Some(TokKind::LParen),
            ')' => Some(TokKind::RParen),
            ';' => Some(TokKind::Semi),
            '=' => Some(TokKind::Eq),
            _ => None,
        };
        if let Some(kind) = simple {
            bump!();
            toks.push(Tok {
                kind,
                line: l,
                column: c,
            });
            continue;
        }
        if ch == '"' {
            bump!();
            let mut s = String::new();
            loop {
                match bump!() {
                    Some('"') => break,
                    Some('\n') | None => {
                        return Err(FormatError::Syntax {
                            line: l,
                            column: c,
                            message: "unterminated string".into(),
                        })
                    }
                    Some(other) => s.push(other),
                }
            }
            toks.push(Tok {
                kind: TokKind::Str(s),
                line: l,
                column: c,
            });
            continue;
        }
        if ch.is_ascii_digit() || ch == '-' || ch == '+' || ch == '.' {
            let mut raw = String::new();
            while let Some(&n) = chars.peek() {
                if n.is_ascii_digit() || "+-.eE".contains(n) {
                    raw.push(n);
                    bump!();
                } else {
                    break;
                }
            }
            let value: f64 = raw.parse().map_err(|_| FormatError::Syntax {
                line: l,
                column: c,
                message: format!("malformed number `{raw}`"),
            })?;
            toks.push(Tok {
                kind: TokKind::Num(value),
                line: l,
                column: c,
            });
            continue;
        }
        if is_name_start(ch) {
            let mut s = String::new();
            while let Some(&n) = chars.peek() {
                if is_name_part(n) {
                    s.push(n);
                    bump!();
                } else {
                    break;
                }
            }
            toks.push(Tok {
                kind: TokKind::Ident(s),
                line: l,
                column: c,
            });
            continue;
        }
        return Err(FormatError::Syntax {
            line: l,
            column: c,
            message: format!("unexpected character `{ch}`"),
        });
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    warnings: Vec<String>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn next(&mut self) -> Tok {
        let tok = self.peek().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        tok
    }

    fn expect(&mut self, kind: &TokKind, what: &str) -> Result<Tok, FormatError> {
        let tok = self.next();
        if &tok.kind == kind {
            Ok(tok)
        } else {
            Err(syntax(
                &tok,
                format!("expected {what}, found {}", tok.kind.describe()),
            ))
        }
    }

    fn expect_name(&mut self, what: &str) -> Result<(String, Tok), FormatError> {
        let tok = self.next();
        match &tok.kind {
            TokKind::Ident(s) => Ok((s.clone(), tok.clone())),
            other => Err(syntax(
                &tok,
                format!("expected {what}, found {}", other.describe()),
            )),
        }
    }

    fn expect_keyword(&mut self, word: &str) -> Result<(), FormatError> {
        let (name, tok) = self.expect_name(&format!("`{word}`"))?;
        if name == word {
            Ok(())
        } else {
            Err(syntax(&tok, format!("expected `{word}`, found `{name}`")))
        }
    }

    /// Skips an unrecognized `name = ...;` field, recording a warning.
    fn skip_field(&mut self, owner: &str, field: &str, at: &Tok) -> Result<(), FormatError> {
        self.expect(&TokKind::Eq, "`=` in field")?;
        let mut depth = 0usize;
        loop {
            let tok = self.next();
            match tok.kind {
                TokKind::LParen | TokKind::LBrace => depth += 1,
                TokKind::RParen => depth = depth.saturating_sub(1),
                TokKind::Semi if depth == 0 => break,
                TokKind::RBrace | TokKind::Eof => {
                    return Err(syntax(&tok, format!("unterminated field `{field}`")))
                }
                _ => {}
            }
        }
        self.warnings.push(format!(
            "line {}: ignored field `{field}` in {owner}",
            at.line
        ));
        Ok(())
    }

    fn parse_document(&mut self) -> Result<NetworkDocument, FormatError> {
        self.expect_keyword("bnet")?;
        let name = {
            let tok = self.next();
            match &tok.kind {
                TokKind::Str(s) | TokKind::Ident(s) => s.clone(),
                other => {
                    return Err(syntax(
                        &tok,
                        format!("expected network name, found {}", other.describe()),
                    ))
                }
            }
        };
        self.expect(&TokKind::LBrace, "`{` opening the network body")?;

        let mut nodes: Vec<NodeDecl> = Vec::new();
        let mut edges: Vec<(String, String)> = Vec::new();
        let mut cpts: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        loop {
            let tok = self.next();
            match &tok.kind {
                TokKind::RBrace => break,
                TokKind::Ident(word) => match word.as_str() {
                    "node" => nodes.push(self.parse_node()?),
                    "link" => {
                        let (parent, _) = self.expect_name("link parent")?;
                        let (child, _) = self.expect_name("link child")?;
                        self.expect(&TokKind::Semi, "`;` after link")?;
                        edges.push((parent, child));
                    }
                    "relation" => {
                        let (node, at) = self.parse_relation()?;
                        if cpts.insert(node.0.clone(), node.1).is_some() {
                            return Err(syntax(
                                &at,
                                format!("node `{}` has more than one relation", node.0),
                            ));
                        }
                    }
                    other => {
                        let field = other.to_string();
                        self.skip_field("the network body", &field, &tok)?;
                    }
                },
                other => {
                    return Err(syntax(
                        &tok,
                        format!("expected an item or `}}`, found {}", other.describe()),
                    ))
                }
            }
        }
        let tok = self.peek().clone();
        if tok.kind != TokKind::Eof {
            return Err(syntax(
                &tok,
                format!("trailing input after network: {}", tok.kind.describe()),
            ));
        }
        Ok(NetworkDocument {
            name,
            nodes,
            edges,
            cpts,
        })
    }

    fn parse_node(&mut self) -> Result<NodeDecl, FormatError> {
        let (name, _) = self.expect_name("node name")?;
        self.expect(&TokKind::LParen, "`(` before the node kind")?;
        let (kind, kind_tok) = self.expect_name("node kind")?;
        if kind != "finite-states" {
            return Err(syntax(
                &kind_tok,
                format!("unsupported node kind `{kind}` (only finite-states)"),
            ));
        }
        self.expect(&TokKind::RParen, "`)` after the node kind")?;
        self.expect(&TokKind::LBrace, "`{` opening the node body")?;
        let mut states: Option<Vec<String>> = None;
        loop {
            let tok = self.next();
            match &tok.kind {
                TokKind::RBrace => break,
                TokKind::Ident(field) if field == "states" => {
                    if states.is_some() {
                        return Err(syntax(&tok, format!("node `{name}` lists states twice")));
                    }
                    self.expect(&TokKind::Eq, "`=` after `states`")?;
                    self.expect(&TokKind::LParen, "`(` opening the state list")?;
                    let mut list = Vec::new();
                    loop {
                        let tok = self.next();
                        match &tok.kind {
                            TokKind::RParen => break,
                            TokKind::Ident(s) => list.push(s.clone()),
                            TokKind::Str(s) => list.push(s.clone()),
                            other => {
                                return Err(syntax(
                                    &tok,
                                    format!("expected a state name, found {}", other.describe()),
                                ))
                            }
                        }
                    }
                    self.expect(&TokKind::Semi, "`;` after the state list")?;
                    states = Some(list);
                }
                TokKind::Ident(field) => {
                    let field = field.clone();
                    self.skip_field(&format!("node `{name}`"), &field, &tok)?;
                }
                other => {
                    return Err(syntax(
                        &tok,
                        format!("expected a node field or `}}`, found {}", other.describe()),
                    ))
                }
            }
        }
        let states = states.ok_or_else(|| {
            syntax(self.peek(), format!("node `{name}` declares no states"))
        })?;
        Ok(NodeDecl { name, states })
    }

    fn parse_relation(&mut self) -> Result<((String, Vec<f64>), Tok), FormatError> {
        let (node, at) = self.expect_name("relation node name")?;
        self.expect(&TokKind::LBrace, "`{` opening the relation body")?;
        let mut values: Option<Vec<f64>> = None;
        loop {
            let tok = self.next();
            match &tok.kind {
                TokKind::RBrace => break,
                TokKind::Ident(field) if field == "values" => {
                    if values.is_some() {
                        return Err(syntax(
                            &tok,
                            format!("relation `{node}` lists values twice"),
                        ));
                    }
                    self.expect(&TokKind::Eq, "`=` after `values`")?;
                    self.expect_keyword("table")?;
                    self.expect(&TokKind::LParen, "`(` opening the value table")?;
                    let mut list = Vec::new();
                    loop {
                        let tok = self.next();
                        match &tok.kind {
                            TokKind::RParen => break,
                            TokKind::Num(v) => list.push(*v),
                            other => {
                                return Err(syntax(
                                    &tok,
                                    format!("expected a number, found {}", other.describe()),
                                ))
                            }
                        }
                    }
                    self.expect(&TokKind::Semi, "`;` after the value table")?;
                    values = Some(list);
                }
                TokKind::Ident(field) => {
                    let field = field.clone();
                    self.skip_field(&format!("relation `{node}`"), &field, &tok)?;
                }
                other => {
                    return Err(syntax(
                        &tok,
                        format!(
                            "expected a relation field or `}}`, found {}",
                            other.describe()
                        ),
                    ))
                }
            }
        }
        let values = values.ok_or_else(|| {
            syntax(self.peek(), format!("relation `{node}` has no values"))
        })?;
        Ok(((node, values), at))
    }
}

/// Parses an Elvira-subset document into a validated network, carrying
/// any skip/repair warnings alongside.
pub fn parse_elvira(text: &str) -> Result<Parsed, FormatError> {
    let mut parser = Parser {
        toks: lex(text)?,
        pos: 0,
        warnings: Vec::new(),
    };
    let doc = parser.parse_document()?;
    let mut parsed = doc.build()?;
    let mut warnings = parser.warnings;
    warnings.append(&mut parsed.warnings);
    parsed.warnings = warnings;
    Ok(parsed)
}

/// Rounds one probability row to 6-decimal fixed point such that the
/// printed values sum to exactly 1.000000 (largest-remainder method),
/// keeping every entry within one grid step of its true value.
fn fixed_point_row(row: &[f64]) -> Vec<String> {
    const SCALE: f64 = 1e6;
    let scaled: Vec<f64> = row.iter().map(|v| v * SCALE).collect();
    let mut units: Vec<i64> = scaled.iter().map(|v| v.floor() as i64).collect();
    let residual = (SCALE as i64 - units.iter().sum::<i64>()).max(0) as usize;
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = scaled[a] - scaled[a].floor();
        let fb = scaled[b] - scaled[b].floor();
        fb.partial_cmp(&fa).unwrap_or(core::cmp::Ordering::Equal)
    });
    for &i in order.iter().cycle().take(residual) {
        units[i] += 1;
    }
    units
        .iter()
        .map(|&u| format!("{:.6}", u as f64 / SCALE))
        .collect()
}

/// Writes a network as an Elvira-subset document: declaration order,
/// 6-decimal fixed-point values (rows adjusted to sum to exactly 1),
/// deterministic layout.
pub fn write_elvira(name: &str, net: &BayesianNetwork) -> String {
    let doc = NetworkDocument::from_network(name, net);
    let mut out = String::new();
    let _ = writeln!(out, "bnet \"{}\" {{", doc.name);
    for node in &doc.nodes {
        let _ = writeln!(out, "  node {} (finite-states) {{", node.name);
        let _ = writeln!(out, "    states = ({});", node.states.join(" "));
        let _ = writeln!(out, "  }}");
    }
    for (parent, child) in &doc.edges {
        let _ = writeln!(out, "  link {parent} {child};");
    }
    for node in &doc.nodes {
        let card = node.states.len();
        let values: Vec<String> = doc.cpts[&node.name]
            .chunks(card)
            .flat_map(fixed_point_row)
            .collect();
        let _ = writeln!(out, "  relation {} {{", node.name);
        let _ = writeln!(out, "    values = table ({});", values.join(" "));
        let _ = writeln!(out, "  }}");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use pbn_core::bayesnet::student_network;

    const MINIMAL: &str = r#"
        // a two-node chain
        bnet "Chain" {
          node A (finite-states) { states = (a0 a1); }
          node B (finite-states) { states = (b0 b1); }
          link A B;
          relation A { values = table (0.3 0.7); }
          relation B { values = table (0.9 0.1 0.2 0.8); }
        }
    "#;

    #[test]
    fn minimal_document_parses() {
        let parsed = parse_elvira(MINIMAL).unwrap();
        assert_eq!(parsed.name, "Chain");
        assert_eq!(parsed.network.variables().len(), 2);
        assert_eq!(parsed.network.parents("B").unwrap(), ["A"]);
        assert!(parsed.warnings.is_empty());
        let joint = parsed.network.joint_distribution().unwrap();
        // P(A=a0, B=b0) = 0.3 * 0.9
        assert!((joint.values()[0] - 0.27).abs() < 1e-12);
    }

    #[test]
    fn student_round_trip_is_exact_at_two_decimals() {
        let net = student_network();
        let text = write_elvira("Student", &net);
        let parsed = parse_elvira(&text).unwrap();
        assert_eq!(parsed.name, "Student");
        let a = net.joint_distribution().unwrap();
        let b = parsed.network.joint_distribution().unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn value_count_error_names_the_node() {
        let text = MINIMAL.replace("0.9 0.1 0.2 0.8", "0.9 0.1 0.2 0.8 0.5");
        let err = parse_elvira(&text).unwrap_err();
        assert!(err.to_string().contains("`B`"), "{err}");
        assert!(err.to_string().contains("4"), "{err}");
    }

    #[test]
    fn missing_relation_is_an_error() {
        let text = MINIMAL.replace("relation A { values = table (0.3 0.7); }", "");
        let err = parse_elvira(&text).unwrap_err();
        assert!(err.to_string().contains("`A`"), "{err}");
        assert!(err.to_string().contains("no CPT"), "{err}");
    }

    #[test]
    fn cosmetic_fields_are_skipped_with_warnings() {
        let text = MINIMAL.replace(
            "bnet \"Chain\" {",
            "bnet \"Chain\" {\n title = \"demo\";\n pos-x = (10 20);",
        );
        let parsed = parse_elvira(&text).unwrap();
        assert_eq!(parsed.warnings.len(), 2);
        assert!(parsed.warnings[0].contains("title"));
    }

    #[test]
    fn off_normal_row_is_repaired_with_warning() {
        let text = MINIMAL.replace("0.3 0.7", "0.300000 0.699999");
        let parsed = parse_elvira(&text).unwrap();
        assert_eq!(parsed.warnings.len(), 1);
        let p_a = parsed.network.cpt("A").unwrap();
        assert!((p_a.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn badly_off_normal_row_is_an_error() {
        let text = MINIMAL.replace("0.3 0.7", "0.3 0.6");
        let err = parse_elvira(&text).unwrap_err();
        assert!(err.to_string().contains("`A`"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let err = parse_elvira("bnet X {\n  node ! }").unwrap_err();
        match err {
            FormatError::Syntax { line, column, .. } => {
                assert_eq!(line, 2);
                assert_eq!(column, 8);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn unknown_link_endpoint_is_an_error() {
        let text = MINIMAL.replace("link A B;", "link A C;");
        let err = parse_elvira(&text).unwrap_err();
        assert!(err.to_string().contains("`C`"), "{err}");
    }

    #[test]
    fn single_node_write_is_minimal() {
        let parsed = parse_elvira(
            "bnet one { node A (finite-states) { states = (x y); } relation A { values = table (0.5 0.5); } }",
        )
        .unwrap();
        let text = write_elvira("one", &parsed.network);
        assert_eq!(
            text,
            "bnet \"one\" {\n  node A (finite-states) {\n    states = (x y);\n  }\n  relation A {\n    values = table (0.500000 0.500000);\n  }\n}\n"
        );
    }

    #[test]
    fn three_state_order_is_preserved() {
        let net = student_network();
        let text = write_elvira("Student", &net);
        assert!(text.contains("states = (g1 g2 g3);"));
        let parsed = parse_elvira(&text).unwrap();
        assert_eq!(parsed.network.variable("G").unwrap().states(), ["g1", "g2", "g3"]);
    }
}
