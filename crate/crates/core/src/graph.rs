//! In-memory AMR graph model.
//!
//! A graph is a set of instance triples `(var, :instance, concept)`, relation
//! triples between variables and attribute triples from a variable to a
//! constant. Relations are stored in their forward orientation: inverse roles
//! (`:ARG0-of`) are normalized by the parser before they get here.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A variable id such as `b` or `s2`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Variable(String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Self {
        Variable(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Variable {
    fn from(s: &str) -> Self {
        Variable(s.to_string())
    }
}

/// A relation label, always stored with its leading colon (`:ARG0`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Role(String);

impl Role {
    /// Builds a role, adding the leading colon when missing.
    pub fn new(label: impl Into<String>) -> Self {
        let label = label.into();
        if label.starts_with(':') {
            Role(label)
        } else {
            Role(format!(":{label}"))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// `:consist-of` looks like an inverse but is a primitive role.
    pub fn is_inverted(&self) -> bool {
        self.0.ends_with("-of") && self.0 != ":consist-of"
    }

    /// The forward role for an inverted one (`:ARG0-of` -> `:ARG0`).
    pub fn uninverted(&self) -> Role {
        debug_assert!(self.is_inverted());
        Role(self.0[..self.0.len() - 3].to_string())
    }

    /// The inverse spelling of a forward role (`:ARG0` -> `:ARG0-of`).
    pub fn inverted(&self) -> Role {
        Role(format!("{}-of", self.0))
    }

    pub fn polarity() -> Role {
        Role(":polarity".to_string())
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Role {
    fn from(s: &str) -> Self {
        Role::new(s)
    }
}

/// A constant value kept exactly as written: quoted strings keep their quotes,
/// numbers and symbols (`-`, `+`, `imperative`) are bare.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Constant(String);

impl Constant {
    pub fn new(raw: impl Into<String>) -> Self {
        Constant(raw.into())
    }

    /// The negative polarity marker `-`.
    pub fn negative() -> Self {
        Constant("-".to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_quoted(&self) -> bool {
        self.0.len() >= 2 && self.0.starts_with('"') && self.0.ends_with('"')
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Constant {
    fn from(s: &str) -> Self {
        Constant(s.to_string())
    }
}

/// Edge between two variables, oriented forward.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub source: Variable,
    pub role: Role,
    pub target: Variable,
}

impl Relation {
    pub fn new(source: impl Into<Variable>, role: impl Into<Role>, target: impl Into<Variable>) -> Self {
        Relation {
            source: source.into(),
            role: role.into(),
            target: target.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Attribute {
    pub source: Variable,
    pub role: Role,
    pub value: Constant,
}

impl Attribute {
    pub fn new(source: impl Into<Variable>, role: impl Into<Role>, value: impl Into<Constant>) -> Self {
        Attribute {
            source: source.into(),
            role: role.into(),
            value: value.into(),
        }
    }
}

/// Target slot of a flat triple.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripleTarget {
    Concept(String),
    Variable(Variable),
    Constant(Constant),
}

impl TripleTarget {
    pub fn as_str(&self) -> &str {
        match self {
            TripleTarget::Concept(c) => c,
            TripleTarget::Variable(v) => v.as_str(),
            TripleTarget::Constant(c) => c.as_str(),
        }
    }
}

/// `(u, r, v)` in the flat triple view; instances use the role `:instance`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub source: Variable,
    pub role: Role,
    pub target: TripleTarget,
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.source, self.role, self.target.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("root variable `{0}` has no instance")]
    MissingRoot(Variable),
    #[error("variable `{0}` is used but never instantiated")]
    UndeclaredVariable(Variable),
    #[error("variable `{0}` is not reachable from the root")]
    Unreachable(Variable),
    #[error("relation `{0}` is an inverse role; store it forward")]
    InverseRole(Role),
    #[error("empty concept label for `{0}`")]
    EmptyConcept(Variable),
}

/// A rooted AMR graph.
///
/// Construct with [`AmrGraph::builder`] or [`crate::penman::parse`]; every
/// constructor validates, so a value of this type always satisfies the graph
/// invariants. Equality compares triples only; metadata is carried along but
/// never interpreted.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AmrGraph {
    root: Variable,
    instances: BTreeMap<Variable, String>,
    relations: BTreeSet<Relation>,
    attributes: BTreeSet<Attribute>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    metadata: Vec<(String, String)>,
}

impl PartialEq for AmrGraph {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
            && self.instances == other.instances
            && self.relations == other.relations
            && self.attributes == other.attributes
    }
}

impl Eq for AmrGraph {}

impl AmrGraph {
    pub fn builder(root: impl Into<Variable>) -> GraphBuilder {
        GraphBuilder {
            graph: AmrGraph {
                root: root.into(),
                instances: BTreeMap::new(),
                relations: BTreeSet::new(),
                attributes: BTreeSet::new(),
                metadata: Vec::new(),
            },
        }
    }

    pub fn root(&self) -> &Variable {
        &self.root
    }

    pub fn instances(&self) -> &BTreeMap<Variable, String> {
        &self.instances
    }

    pub fn relations(&self) -> &BTreeSet<Relation> {
        &self.relations
    }

    pub fn attributes(&self) -> &BTreeSet<Attribute> {
        &self.attributes
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    pub fn concept(&self, var: &Variable) -> Option<&str> {
        self.instances.get(var).map(String::as_str)
    }

    pub fn node_count(&self) -> usize {
        self.instances.len()
    }

    pub fn contains(&self, var: &Variable) -> bool {
        self.instances.contains_key(var)
    }

    /// Outgoing relation edges of `var`.
    pub fn outgoing<'a>(&'a self, var: &'a Variable) -> impl Iterator<Item = &'a Relation> + 'a {
        self.relations.iter().filter(move |r| &r.source == var)
    }

    pub fn incoming<'a>(&'a self, var: &'a Variable) -> impl Iterator<Item = &'a Relation> + 'a {
        self.relations.iter().filter(move |r| &r.target == var)
    }

    pub fn attributes_of<'a>(&'a self, var: &'a Variable) -> impl Iterator<Item = &'a Attribute> + 'a {
        self.attributes.iter().filter(move |a| &a.source == var)
    }

    /// True when the node has no outgoing relation edges.
    pub fn is_leaf(&self, var: &Variable) -> bool {
        self.outgoing(var).next().is_none()
    }

    pub fn has_negative_polarity(&self, var: &Variable) -> bool {
        self.attributes
            .iter()
            .any(|a| &a.source == var && a.role.as_str() == ":polarity" && a.value.as_str() == "-")
    }

    /// Flat triple view: instances first (by variable), then relations, then
    /// attributes, each in sorted order.
    pub fn to_triples(&self) -> Vec<Triple> {
        let instance = Role::new(":instance");
        let mut out = Vec::with_capacity(self.instances.len() + self.relations.len() + self.attributes.len());
        // root first so the list reads top-down like PENMAN
        let mut order: Vec<&Variable> = vec![&self.root];
        order.extend(self.instances.keys().filter(|v| *v != &self.root));
        for var in order {
            out.push(Triple {
                source: var.clone(),
                role: instance.clone(),
                target: TripleTarget::Concept(self.instances[var].clone()),
            });
        }
        out.extend(self.relations.iter().map(|r| Triple {
            source: r.source.clone(),
            role: r.role.clone(),
            target: TripleTarget::Variable(r.target.clone()),
        }));
        out.extend(self.attributes.iter().map(|a| Triple {
            source: a.source.clone(),
            role: a.role.clone(),
            target: TripleTarget::Constant(a.value.clone()),
        }));
        out
    }

    /// Triple set for order-insensitive comparisons.
    pub fn triple_set(&self) -> BTreeSet<Triple> {
        self.to_triples().into_iter().collect()
    }

    /// A variable name not yet used in the graph, derived from `base` by
    /// appending a counter when needed (`s`, `s2`, `s3`, ...).
    pub fn fresh_variable(&self, base: &str) -> Variable {
        let base = if base.is_empty() { "x" } else { base };
        let candidate = Variable::new(base);
        if !self.contains(&candidate) {
            return candidate;
        }
        (2..)
            .map(|n| Variable::new(format!("{base}{n}")))
            .find(|v| !self.contains(v))
            .expect("unbounded counter")
    }

    /// Attaches a copy of `other` below `at` via `role`, renaming any of
    /// `other`'s variables that collide with ours. Returns the variable the
    /// grafted root received.
    pub fn graft(&mut self, at: &Variable, role: impl Into<Role>, other: &AmrGraph) -> Result<Variable, GraphError> {
        if !self.contains(at) {
            return Err(GraphError::UndeclaredVariable(at.clone()));
        }
        let mut rename: BTreeMap<Variable, Variable> = BTreeMap::new();
        let mut next = self.clone();
        for (var, concept) in &other.instances {
            let fresh = next.fresh_variable(strip_counter(var.as_str()));
            next.instances.insert(fresh.clone(), concept.clone());
            rename.insert(var.clone(), fresh);
        }
        for r in &other.relations {
            next.relations.insert(Relation {
                source: rename[&r.source].clone(),
                role: r.role.clone(),
                target: rename[&r.target].clone(),
            });
        }
        for a in &other.attributes {
            next.attributes.insert(Attribute {
                source: rename[&a.source].clone(),
                role: a.role.clone(),
                value: a.value.clone(),
            });
        }
        let new_root = rename[&other.root].clone();
        next.relations.insert(Relation {
            source: at.clone(),
            role: role.into(),
            target: new_root.clone(),
        });
        next.validate()?;
        *self = next;
        Ok(new_root)
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<(), GraphError> {
        if !self.instances.contains_key(&self.root) {
            return Err(GraphError::MissingRoot(self.root.clone()));
        }
        for (var, concept) in &self.instances {
            if concept.is_empty() {
                return Err(GraphError::EmptyConcept(var.clone()));
            }
        }
        for r in &self.relations {
            if r.role.is_inverted() {
                return Err(GraphError::InverseRole(r.role.clone()));
            }
            for v in [&r.source, &r.target] {
                if !self.instances.contains_key(v) {
                    return Err(GraphError::UndeclaredVariable(v.clone()));
                }
            }
        }
        for a in &self.attributes {
            if !self.instances.contains_key(&a.source) {
                return Err(GraphError::UndeclaredVariable(a.source.clone()));
            }
        }
        let reached = self.reachable_from_root(None);
        if let Some(v) = self.instances.keys().find(|v| !reached.contains(*v)) {
            return Err(GraphError::Unreachable(v.clone()));
        }
        Ok(())
    }

    /// Nodes connected to the root, following edges in either direction
    /// (inverse roles make forward-only reachability too strict). `without`
    /// pretends one node is absent.
    pub(crate) fn reachable_from_root(&self, without: Option<&Variable>) -> BTreeSet<Variable> {
        let mut adjacency: BTreeMap<&Variable, Vec<&Variable>> = BTreeMap::new();
        for r in &self.relations {
            if Some(&r.source) == without || Some(&r.target) == without {
                continue;
            }
            adjacency.entry(&r.source).or_default().push(&r.target);
            adjacency.entry(&r.target).or_default().push(&r.source);
        }
        let mut seen = BTreeSet::new();
        if Some(&self.root) == without {
            return seen;
        }
        let mut queue = VecDeque::from([&self.root]);
        seen.insert(self.root.clone());
        while let Some(v) = queue.pop_front() {
            for next in adjacency.get(v).into_iter().flatten() {
                if seen.insert((*next).clone()) {
                    queue.push_back(next);
                }
            }
        }
        seen
    }

    pub(crate) fn set_concept(&mut self, var: &Variable, concept: String) {
        if let Some(slot) = self.instances.get_mut(var) {
            *slot = concept;
        }
    }

    pub(crate) fn insert_attribute(&mut self, attribute: Attribute) -> bool {
        self.attributes.insert(attribute)
    }

    /// Removes a node with every triple that mentions it.
    pub(crate) fn remove_node(&mut self, var: &Variable) {
        self.instances.remove(var);
        self.relations.retain(|r| &r.source != var && &r.target != var);
        self.attributes.retain(|a| &a.source != var);
    }

    pub(crate) fn set_metadata(&mut self, metadata: Vec<(String, String)>) {
        self.metadata = metadata;
    }

    /// Drops every `:wiki` attribute.
    pub fn strip_wiki(&mut self) {
        self.attributes.retain(|a| a.role.as_str() != ":wiki");
    }
}

fn strip_counter(name: &str) -> &str {
    let trimmed = name.trim_end_matches(|c: char| c.is_ascii_digit());
    if trimmed.is_empty() {
        name
    } else {
        trimmed
    }
}

/// Incremental constructor that validates on [`GraphBuilder::build`].
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    graph: AmrGraph,
}

impl GraphBuilder {
    pub fn instance(mut self, var: impl Into<Variable>, concept: impl Into<String>) -> Self {
        self.graph.instances.insert(var.into(), concept.into());
        self
    }

    pub fn relation(mut self, source: impl Into<Variable>, role: impl Into<Role>, target: impl Into<Variable>) -> Self {
        self.graph.relations.insert(Relation::new(source, role, target));
        self
    }

    pub fn attribute(mut self, source: impl Into<Variable>, role: impl Into<Role>, value: impl Into<Constant>) -> Self {
        self.graph.attributes.insert(Attribute::new(source, role, value));
        self
    }

    pub fn metadata(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.graph.metadata.push((key.into(), value.into()));
        self
    }

    pub fn build(self) -> Result<AmrGraph, GraphError> {
        self.graph.validate()?;
        Ok(self.graph)
    }
}
