//! PENMAN notation reader and writer.
//!
//! ```text
//! # ::snt The snake bites the tiger.
//! (b / bite-01
//!     :ARG0 (s / snake)
//!     :ARG1 (t / tiger))
//! ```
//!
//! Parsing produces an [`AmrGraph`] with inverse roles normalized; writing
//! goes the other way with a deterministic layout.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{AmrGraph, Attribute, GraphError, Relation, Role, Variable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PenmanError {
    #[error("{line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{line}:{column}: variable `{variable}` is given a second concept")]
    DuplicateVariable { line: usize, column: usize, variable: String },
    #[error("{line}:{column}: reference to undeclared variable `{variable}`")]
    UndeclaredVariable { line: usize, column: usize, variable: String },
    #[error("{line}:{column}: inverse role `{role}` cannot point at a constant")]
    InverseConstant { line: usize, column: usize, role: String },
    #[error("invalid graph: {0}")]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Slash,
    Role(String),
    Symbol(String),
    Quoted(String),
}

/// Options for [`parse_with`].
#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    /// Drop `:wiki` attributes while parsing.
    pub strip_wiki: bool,
}

/// Parses one PENMAN graph. Metadata comment lines (`# ::key value`) are kept
/// on the graph; other comments are ignored.
pub fn parse(input: &str) -> Result<AmrGraph, PenmanError> {
    parse_with(input, &ParseOptions::default())
}

pub fn parse_with(input: &str, options: &ParseOptions) -> Result<AmrGraph, PenmanError> {
    let (tokens, metadata) = lex(input)?;
    let mut parser = TreeParser { tokens: &tokens, at: 0, end: end_pos(input) };
    let tree = parser.node()?;
    if let Some((_, pos)) = parser.tokens.get(parser.at) {
        return Err(syntax(*pos, "trailing content after the graph"));
    }
    let mut graph = interpret(tree)?;
    graph.set_metadata(metadata);
    if options.strip_wiki {
        graph.strip_wiki();
    }
    Ok(graph)
}

/// Parses a corpus with one graph per blank-line-separated block. Blocks
/// holding only comments are skipped.
pub fn parse_corpus(input: &str, options: &ParseOptions) -> Result<Vec<AmrGraph>, PenmanError> {
    let mut graphs = Vec::new();
    let mut block = String::new();
    let mut block_start = 1;
    let flush = |block: &mut String, start: usize, graphs: &mut Vec<AmrGraph>| -> Result<(), PenmanError> {
        if block.lines().any(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty()) {
            let g = parse_with(block, options).map_err(|e| shift_lines(e, start - 1))?;
            graphs.push(g);
        }
        block.clear();
        Ok(())
    };
    for (i, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            flush(&mut block, block_start, &mut graphs)?;
            block_start = i + 2;
        } else {
            block.push_str(line);
            block.push('\n');
        }
    }
    flush(&mut block, block_start, &mut graphs)?;
    Ok(graphs)
}

fn shift_lines(err: PenmanError, by: usize) -> PenmanError {
    match err {
        PenmanError::Syntax { line, column, message } => PenmanError::Syntax { line: line + by, column, message },
        PenmanError::DuplicateVariable { line, column, variable } => {
            PenmanError::DuplicateVariable { line: line + by, column, variable }
        }
        PenmanError::UndeclaredVariable { line, column, variable } => {
            PenmanError::UndeclaredVariable { line: line + by, column, variable }
        }
        PenmanError::InverseConstant { line, column, role } => PenmanError::InverseConstant { line: line + by, column, role },
        other => other,
    }
}

fn syntax(pos: Pos, message: impl Into<String>) -> PenmanError {
    PenmanError::Syntax { line: pos.line, column: pos.column, message: message.into() }
}

fn end_pos(input: &str) -> Pos {
    let line = input.lines().count().max(1);
    let column = input.lines().last().map(|l| l.chars().count() + 1).unwrap_or(1);
    Pos { line, column }
}

fn is_delimiter(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '"' | '/')
}

type Metadata = Vec<(String, String)>;

fn lex(input: &str) -> Result<(Vec<(Tok, Pos)>, Metadata), PenmanError> {
    let mut tokens = Vec::new();
    let mut metadata = Vec::new();
    for (line_idx, line) in input.lines().enumerate() {
        let line_no = line_idx + 1;
        if line.trim_start().starts_with('#') {
            let body = line.trim_start().trim_start_matches('#').trim();
            // `# ::snt text ::id x` may carry several fields on one line
            for field in body.split("::").skip(1) {
                let field = field.trim();
                if field.is_empty() {
                    continue;
                }
                let (key, value) = field.split_once(char::is_whitespace).unwrap_or((field, ""));
                metadata.push((key.to_string(), value.trim().to_string()));
            }
            continue;
        }
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let pos = Pos { line: line_no, column: i + 1 };
            match c {
                _ if c.is_whitespace() => i += 1,
                '(' => {
                    tokens.push((Tok::Open, pos));
                    i += 1;
                }
                ')' => {
                    tokens.push((Tok::Close, pos));
                    i += 1;
                }
                '/' => {
                    tokens.push((Tok::Slash, pos));
                    i += 1;
                }
                '"' => {
                    let mut j = i + 1;
                    let mut escaped = false;
                    while j < chars.len() {
                        if escaped {
                            escaped = false;
                        } else if chars[j] == '\\' {
                            escaped = true;
                        } else if chars[j] == '"' {
                            break;
                        }
                        j += 1;
                    }
                    if j >= chars.len() {
                        return Err(syntax(pos, "unterminated string"));
                    }
                    let text: String = chars[i..=j].iter().collect();
                    tokens.push((Tok::Quoted(text), pos));
                    i = skip_alignment(&chars, j + 1);
                }
                ':' => {
                    let mut j = i + 1;
                    while j < chars.len() && !is_delimiter(chars[j]) {
                        j += 1;
                    }
                    if j == i + 1 {
                        return Err(syntax(pos, "empty role name"));
                    }
                    tokens.push((Tok::Role(chars[i..j].iter().collect()), pos));
                    i = j;
                }
                _ => {
                    let mut j = i;
                    while j < chars.len() && !is_delimiter(chars[j]) && chars[j] != '~' {
                        j += 1;
                    }
                    if j == i {
                        return Err(syntax(pos, format!("unexpected character `{c}`")));
                    }
                    tokens.push((Tok::Symbol(chars[i..j].iter().collect()), pos));
                    i = skip_alignment(&chars, j);
                }
            }
        }
    }
    Ok((tokens, metadata))
}

/// Skips an alignment marker such as `~e.3,4`.
fn skip_alignment(chars: &[char], mut i: usize) -> usize {
    if i < chars.len() && chars[i] == '~' {
        while i < chars.len() && !is_delimiter(chars[i]) {
            i += 1;
        }
    }
    i
}

#[derive(Debug)]
struct NodeTree {
    var: String,
    var_pos: Pos,
    concept: String,
    edges: Vec<(String, Pos, Target)>,
}

#[derive(Debug)]
enum Target {
    Node(NodeTree),
    Symbol(String, Pos),
    Quoted(String),
}

struct TreeParser<'a> {
    tokens: &'a [(Tok, Pos)],
    at: usize,
    end: Pos,
}

impl TreeParser<'_> {
    fn next(&mut self, expecting: &str) -> Result<(Tok, Pos), PenmanError> {
        match self.tokens.get(self.at) {
            Some((tok, pos)) => {
                self.at += 1;
                Ok((tok.clone(), *pos))
            }
            None => Err(syntax(self.end, format!("unexpected end of input, expected {expecting}"))),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.at).map(|(t, _)| t)
    }

    fn node(&mut self) -> Result<NodeTree, PenmanError> {
        let (tok, pos) = self.next("`(`")?;
        if tok != Tok::Open {
            return Err(syntax(pos, "expected `(`"));
        }
        let (var, var_pos) = match self.next("a variable")? {
            (Tok::Symbol(s), p) => (s, p),
            (_, p) => return Err(syntax(p, "expected a variable")),
        };
        match self.next("`/`")? {
            (Tok::Slash, _) => {}
            (_, p) => return Err(syntax(p, "expected `/` after variable")),
        }
        let concept = match self.next("a concept")? {
            (Tok::Symbol(s), _) | (Tok::Quoted(s), _) => s,
            (_, p) => return Err(syntax(p, "expected a concept")),
        };
        let mut edges = Vec::new();
        loop {
            match self.next("`)` or a role")? {
                (Tok::Close, _) => break,
                (Tok::Role(role), role_pos) => {
                    let target = match self.peek() {
                        Some(Tok::Open) => Target::Node(self.node()?),
                        _ => match self.next("a role target")? {
                            (Tok::Symbol(s), p) => Target::Symbol(s, p),
                            (Tok::Quoted(s), _) => Target::Quoted(s),
                            (_, p) => return Err(syntax(p, "expected a role target")),
                        },
                    };
                    edges.push((role, role_pos, target));
                }
                (_, p) => return Err(syntax(p, "expected `)` or a role")),
            }
        }
        Ok(NodeTree { var, var_pos, concept, edges })
    }
}

/// Bare symbols that look like AMR variables (`x`, `s2`). Undeclared ones are
/// reported instead of being read as constants.
fn looks_like_variable(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase()) && chars.all(|c| c.is_ascii_digit())
}

fn interpret(tree: NodeTree) -> Result<AmrGraph, PenmanError> {
    let mut declared: BTreeMap<String, String> = BTreeMap::new();
    collect_declarations(&tree, &mut declared)?;
    let mut relations = BTreeSet::new();
    let mut attributes = BTreeSet::new();
    collect_edges(&tree, &declared, &mut relations, &mut attributes)?;
    let mut builder = AmrGraph::builder(tree.var.as_str());
    for (var, concept) in declared {
        builder = builder.instance(var.as_str(), concept);
    }
    for r in relations {
        builder = builder.relation(r.source, r.role, r.target);
    }
    for a in attributes {
        builder = builder.attribute(a.source, a.role, a.value);
    }
    Ok(builder.build()?)
}

fn collect_declarations(node: &NodeTree, declared: &mut BTreeMap<String, String>) -> Result<(), PenmanError> {
    if declared.insert(node.var.clone(), node.concept.clone()).is_some() {
        return Err(PenmanError::DuplicateVariable {
            line: node.var_pos.line,
            column: node.var_pos.column,
            variable: node.var.clone(),
        });
    }
    for (_, _, target) in &node.edges {
        if let Target::Node(child) = target {
            collect_declarations(child, declared)?;
        }
    }
    Ok(())
}

fn collect_edges(
    node: &NodeTree,
    declared: &BTreeMap<String, String>,
    relations: &mut BTreeSet<Relation>,
    attributes: &mut BTreeSet<Attribute>,
) -> Result<(), PenmanError> {
    let here = Variable::new(node.var.as_str());
    for (role_text, role_pos, target) in &node.edges {
        let role = Role::new(role_text.as_str());
        let linked = match target {
            Target::Node(child) => {
                collect_edges(child, declared, relations, attributes)?;
                Some(Variable::new(child.var.as_str()))
            }
            Target::Symbol(s, _) if declared.contains_key(s) => Some(Variable::new(s.as_str())),
            Target::Symbol(s, pos) if looks_like_variable(s) => {
                return Err(PenmanError::UndeclaredVariable { line: pos.line, column: pos.column, variable: s.clone() })
            }
            Target::Symbol(_, _) | Target::Quoted(_) => None,
        };
        match linked {
            Some(other) if role.is_inverted() => {
                relations.insert(Relation { source: other, role: role.uninverted(), target: here.clone() });
            }
            Some(other) => {
                relations.insert(Relation { source: here.clone(), role, target: other });
            }
            None => {
                if role.is_inverted() {
                    return Err(PenmanError::InverseConstant {
                        line: role_pos.line,
                        column: role_pos.column,
                        role: role_text.clone(),
                    });
                }
                let value = match target {
                    Target::Symbol(s, _) | Target::Quoted(s) => s.as_str(),
                    Target::Node(_) => unreachable!(),
                };
                attributes.insert(Attribute::new(here.clone(), role, value));
            }
        }
    }
    Ok(())
}

enum Child<'a> {
    Attribute(&'a Attribute),
    Reference(&'a Role, &'a Variable),
    Node(Role, OutNode<'a>),
}

struct OutNode<'a> {
    var: &'a Variable,
    concept: &'a str,
    children: Vec<Child<'a>>,
}

/// Writes `graph` in PENMAN notation, metadata lines first.
///
/// Children are ordered by role label then target; each variable gets its
/// concept at its first depth-first mention and bare references afterwards.
/// Nodes only reachable against edge direction are written with `-of` roles.
pub fn serialize(graph: &AmrGraph) -> String {
    let mut out = String::new();
    for (key, value) in graph.metadata() {
        if value.is_empty() {
            let _ = writeln!(out, "# ::{key}");
        } else {
            let _ = writeln!(out, "# ::{key} {value}");
        }
    }
    let mut state = WriteState { graph, visited: BTreeSet::new(), emitted: BTreeSet::new() };
    let tree = state.visit(graph.root());
    write_node(&mut out, &tree, 0);
    out
}

struct WriteState<'a> {
    graph: &'a AmrGraph,
    visited: BTreeSet<&'a Variable>,
    emitted: BTreeSet<&'a Relation>,
}

impl<'a> WriteState<'a> {
    fn visit(&mut self, var: &'a Variable) -> OutNode<'a> {
        self.visited.insert(var);
        let graph = self.graph;
        // forward edges and attributes share one ordering by role then target
        let mut forward: Vec<(&'a Role, &'a str, Option<&'a Relation>, Option<&'a Attribute>)> = graph
            .outgoing(var)
            .map(|r| (&r.role, r.target.as_str(), Some(r), None))
            .chain(graph.attributes_of(var).map(|a| (&a.role, a.value.as_str(), None, Some(a))))
            .collect();
        forward.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut children = Vec::new();
        for (_, _, relation, attribute) in forward {
            if let Some(a) = attribute {
                children.push(Child::Attribute(a));
                continue;
            }
            let r = relation.expect("relation or attribute");
            if !self.emitted.insert(r) {
                continue;
            }
            if self.visited.contains(&r.target) {
                children.push(Child::Reference(&r.role, &r.target));
            } else {
                let sub = self.visit(&r.target);
                children.push(Child::Node(r.role.clone(), sub));
            }
        }

        let mut inverse: Vec<&'a Relation> = graph.incoming(var).collect();
        inverse.sort_by(|a, b| (&a.role, &a.source).cmp(&(&b.role, &b.source)));
        for r in inverse {
            if self.emitted.contains(r) || self.visited.contains(&r.source) {
                continue;
            }
            self.emitted.insert(r);
            let sub = self.visit(&r.source);
            children.push(Child::Node(r.role.inverted(), sub));
        }

        OutNode { var, concept: graph.concept(var).unwrap_or_default(), children }
    }
}

const INDENT: &str = "    ";

fn write_node(out: &mut String, node: &OutNode<'_>, depth: usize) {
    let _ = write!(out, "({} / {}", node.var, node.concept);
    for child in &node.children {
        out.push('\n');
        for _ in 0..=depth {
            out.push_str(INDENT);
        }
        match child {
            Child::Attribute(a) => {
                let _ = write!(out, "{} {}", a.role, a.value);
            }
            Child::Reference(role, var) => {
                let _ = write!(out, "{role} {var}");
            }
            Child::Node(role, sub) => {
                let _ = write!(out, "{role} ");
                write_node(out, sub, depth + 1);
            }
        }
    }
    out.push(')');
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Constant;

    #[test]
    fn parses_want_graph() {
        let g = parse("(b / bite-01 :ARG0 (s / snake) :ARG1 (t / tiger))").unwrap();
        assert_eq!(g.root().as_str(), "b");
        assert_eq!(g.concept(&"s".into()), Some("snake"));
        assert!(g.relations().contains(&Relation::new("b", ":ARG0", "s")));
        assert!(g.relations().contains(&Relation::new("b", ":ARG1", "t")));
        assert_eq!(g.relations().len(), 2);
        assert!(g.attributes().is_empty());
    }

    #[test]
    fn minimal_graph() {
        let g = parse("(a / and)").unwrap();
        assert_eq!(g.node_count(), 1);
        assert!(g.relations().is_empty());
        assert_eq!(serialize(&g), "(a / and)");
    }

    #[test]
    fn inverse_roles_are_normalized() {
        let g = parse("(b / bite-01 :ARG1-of (s / see-01))").unwrap();
        assert!(g.relations().contains(&Relation::new("s", ":ARG1", "b")));
        assert!(g.relations().iter().all(|r| !r.role.is_inverted()));
    }

    #[test]
    fn consist_of_is_kept() {
        let g = parse("(t / team :consist-of (p / person))").unwrap();
        assert!(g.relations().contains(&Relation::new("t", ":consist-of", "p")));
    }

    #[test]
    fn reentrancy_gives_one_instance() {
        let g = parse("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))").unwrap();
        assert_eq!(g.node_count(), 3);
        assert!(g.relations().contains(&Relation::new("g", ":ARG0", "b")));
        let text = serialize(&g);
        assert_eq!(text.matches("b / boy").count(), 1);
        assert_eq!(parse(&text).unwrap(), g);
    }

    #[test]
    fn constants_are_verbatim() {
        let g = parse(r#"(p / person :name (n / name :op1 "Warren") :polarity - :quant 3.5 :mode imperative)"#).unwrap();
        let values: Vec<&str> = g.attributes().iter().map(|a| a.value.as_str()).collect();
        assert!(values.contains(&"\"Warren\""));
        assert!(values.contains(&"-"));
        assert!(values.contains(&"3.5"));
        assert!(values.contains(&"imperative"));
        assert!(g.attributes().contains(&Attribute::new("p", ":polarity", Constant::negative())));
    }

    #[test]
    fn metadata_is_carried() {
        let text = "# ::id x.1 ::date 2020\n# ::snt The snake bites.\n# plain comment\n(b / bite-01)";
        let g = parse(text).unwrap();
        assert_eq!(
            g.metadata(),
            &[
                ("id".to_string(), "x.1".to_string()),
                ("date".to_string(), "2020".to_string()),
                ("snt".to_string(), "The snake bites.".to_string()),
            ]
        );
        let again = serialize(&g);
        assert!(again.starts_with("# ::id x.1\n# ::date 2020\n# ::snt The snake bites.\n"));
    }

    #[test]
    fn alignments_are_dropped() {
        let g = parse(r#"(b / bite-01~e.2 :ARG0 (s / snake~e.1) :ARG1 "x"~e.4)"#).unwrap();
        assert_eq!(g.concept(&"b".into()), Some("bite-01"));
        assert!(g.attributes().contains(&Attribute::new("b", ":ARG1", "\"x\"")));
    }

    #[test]
    fn wiki_stripping_is_optional() {
        let text = r#"(c / city :wiki "Paris" :name (n / name :op1 "Paris"))"#;
        assert_eq!(parse(text).unwrap().attributes().len(), 2);
        let stripped = parse_with(text, &ParseOptions { strip_wiki: true }).unwrap();
        assert_eq!(stripped.attributes().len(), 1);
    }

    #[test]
    fn errors_carry_positions() {
        match parse("(b / bite-01\n  :ARG0 (s / snake)").unwrap_err() {
            PenmanError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse("(b / bite-01 :ARG0 (b / snake))").unwrap_err() {
            PenmanError::DuplicateVariable { variable, column, .. } => {
                assert_eq!(variable, "b");
                assert_eq!(column, 21);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse("(b / bite-01 :ARG0 x)").unwrap_err(),
            PenmanError::UndeclaredVariable { .. }
        ));
        assert!(matches!(parse("(b bite-01)").unwrap_err(), PenmanError::Syntax { .. }));
        assert!(matches!(parse("(b / bite-01) (c / c)").unwrap_err(), PenmanError::Syntax { .. }));
        assert!(matches!(parse("").unwrap_err(), PenmanError::Syntax { .. }));
        assert!(matches!(parse("(a / b :ARG0-of \"x\")").unwrap_err(), PenmanError::InverseConstant { .. }));
    }

    #[test]
    fn serializer_orders_children() {
        let g = parse("(b / bite-01 :ARG1 (t / tiger) :ARG0 (s / snake))").unwrap();
        assert_eq!(serialize(&g), "(b / bite-01\n    :ARG0 (s / snake)\n    :ARG1 (t / tiger))");
    }

    #[test]
    fn serializer_inverts_when_needed() {
        let g = parse("(b / bite-01 :ARG1-of (s / see-01 :ARG0 (i / i)))").unwrap();
        let text = serialize(&g);
        assert!(text.contains(":ARG1-of (s / see-01"), "{text}");
        assert_eq!(parse(&text).unwrap(), g);
    }

    #[test]
    fn cycles_round_trip() {
        let g = parse("(a / a1 :ARG0 (b / b1 :ARG1 a :ARG2 (c / c1 :ARG0 b)))").unwrap();
        assert_eq!(parse(&serialize(&g)).unwrap(), g);
    }

    #[test]
    fn corpus_blocks() {
        let text = "# ::id 1\n(a / and)\n\n\n# ::id 2\n(b / bite-01\n  :ARG0 (s / snake))\n\n# trailing comment\n";
        let graphs = parse_corpus(text, &ParseOptions::default()).unwrap();
        assert_eq!(graphs.len(), 2);
        let err = parse_corpus("(a / and)\n\n(b / \n", &ParseOptions::default()).unwrap_err();
        match err {
            PenmanError::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
