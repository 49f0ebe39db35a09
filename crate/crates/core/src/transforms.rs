//! The five meaning-altering graph manipulations.
//!
//! | kind | effect |
//! |------|--------|
//! | PN   | adds `:polarity -` to a node |
//! | RS   | exchanges the concepts of two nodes |
//! | US   | deletes a leaf node and its edges |
//! | AR   | replaces a concept by a WordNet antonym |
//! | HS   | replaces a concept by a WordNet hypernym |
//!
//! Every manipulation is a pure function of (graph, seed, database) and
//! returns an [`AppliedManipulation`] describing the exact triples it removed
//! and added.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{AmrGraph, Attribute, Constant, Role, Triple, TripleTarget, Variable};
use crate::wordnet::{AntonymScope, LemmaKey, PartOfSpeech, WordnetDb};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ManipulationType {
    /// Polarity negation.
    PN,
    /// Role swap.
    RS,
    /// Underspecification.
    US,
    /// Antonym replacement.
    AR,
    /// Hypernym substitution.
    HS,
}

impl ManipulationType {
    pub const ALL: [ManipulationType; 5] = [
        ManipulationType::PN,
        ManipulationType::RS,
        ManipulationType::US,
        ManipulationType::AR,
        ManipulationType::HS,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ManipulationType::PN => "PN",
            ManipulationType::RS => "RS",
            ManipulationType::US => "US",
            ManipulationType::AR => "AR",
            ManipulationType::HS => "HS",
        }
    }

    /// AR and HS draw replacement concepts from WordNet.
    pub fn needs_wordnet(self) -> bool {
        matches!(self, ManipulationType::AR | ManipulationType::HS)
    }
}

impl fmt::Display for ManipulationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for ManipulationType {
    type Err = TransformError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "PN" => Ok(ManipulationType::PN),
            "RS" => Ok(ManipulationType::RS),
            "US" => Ok(ManipulationType::US),
            "AR" => Ok(ManipulationType::AR),
            "HS" => Ok(ManipulationType::HS),
            other => Err(TransformError::UnknownKind(other.to_string())),
        }
    }
}

/// Audit record of one manipulation: the triples it removed and added.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppliedManipulation {
    pub kind: ManipulationType,
    pub targets: Vec<Variable>,
    pub before: Vec<Triple>,
    pub after: Vec<Triple>,
    pub rng_seed: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("{kind} is not applicable: {reason}")]
    NotApplicable { kind: ManipulationType, reason: String },
    #[error("no allowed manipulation applies to this graph")]
    NoManipulationApplicable,
    #[error("the set of allowed manipulations is empty")]
    NothingAllowed,
    #[error("unknown manipulation `{0}`")]
    UnknownKind(String),
    #[error("invalid target: {0}")]
    InvalidTarget(String),
}

fn not_applicable(kind: ManipulationType, reason: impl Into<String>) -> TransformError {
    TransformError::NotApplicable { kind, reason: reason.into() }
}

/// Concepts never touched by PN, AR and HS.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformConfig {
    pub pronouns: BTreeSet<String>,
    pub excluded_concepts: BTreeSet<String>,
    /// Concept suffixes treated as structural (`-quantity`, `-entity`, `-91`).
    pub excluded_suffixes: Vec<String>,
    pub antonym_scope: AntonymScope,
    /// Hypernym levels to collect replacements from.
    pub hypernym_depth: usize,
}

const PRONOUNS: &[&str] = &[
    "i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us", "them", "myself", "yourself", "himself",
    "herself", "itself", "ourselves", "yourselves", "themselves", "one", "this", "that", "these", "those", "who",
    "what",
];

const STRUCTURAL: &[&str] = &[
    "and", "or", "amr-unknown", "multi-sentence", "name", "slash", "thing-of", "amr-choice",
];

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig {
            pronouns: PRONOUNS.iter().map(|s| s.to_string()).collect(),
            excluded_concepts: STRUCTURAL.iter().map(|s| s.to_string()).collect(),
            excluded_suffixes: vec!["-quantity".into(), "-entity".into(), "-91".into()],
            antonym_scope: AntonymScope::Synset,
            hypernym_depth: 1,
        }
    }
}

impl TransformConfig {
    pub fn is_pronoun(&self, concept: &str) -> bool {
        self.pronouns.contains(concept)
    }

    /// Whether PN, AR and HS may target a node with this concept.
    pub fn is_content_concept(&self, concept: &str) -> bool {
        !concept.starts_with('"')
            && !concept.chars().all(|c| c.is_ascii_digit() || c == '.' || c == '-')
            && !self.is_pronoun(concept)
            && !self.excluded_concepts.contains(concept)
            && !self.excluded_suffixes.iter().any(|s| concept.ends_with(s.as_str()))
    }
}

/// Splits `go-01` into (`go`, `-01`); labels without a two-digit sense suffix
/// come back whole with an empty suffix.
pub fn split_sense(concept: &str) -> (&str, &str) {
    let b = concept.as_bytes();
    if b.len() > 3 && b[b.len() - 3] == b'-' && b[b.len() - 2].is_ascii_digit() && b[b.len() - 1].is_ascii_digit() {
        concept.split_at(concept.len() - 3)
    } else {
        (concept, "")
    }
}

/// Parts of speech to try for a concept, in order.
pub fn pos_order(concept: &str) -> &'static [PartOfSpeech] {
    if split_sense(concept).1.is_empty() {
        &[PartOfSpeech::Noun, PartOfSpeech::Adjective, PartOfSpeech::Verb, PartOfSpeech::Adverb]
    } else {
        &[PartOfSpeech::Verb, PartOfSpeech::Adjective]
    }
}

/// One concrete edit a manipulation can make.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Edit {
    Negate(Variable),
    Swap(Variable, Variable),
    Remove(Variable),
    Relabel { kind: ManipulationType, target: Variable, concept: String },
}

impl Edit {
    pub fn kind(&self) -> ManipulationType {
        match self {
            Edit::Negate(_) => ManipulationType::PN,
            Edit::Swap(..) => ManipulationType::RS,
            Edit::Remove(_) => ManipulationType::US,
            Edit::Relabel { kind, .. } => *kind,
        }
    }
}

/// Applies manipulations under a configuration and optional WordNet.
#[derive(Clone, Copy, Debug)]
pub struct Transformer<'a> {
    config: &'a TransformConfig,
    wordnet: Option<&'a WordnetDb>,
}

impl<'a> Transformer<'a> {
    pub fn new(config: &'a TransformConfig, wordnet: Option<&'a WordnetDb>) -> Self {
        Transformer { config, wordnet }
    }

    /// Nodes PN may negate, in variable order.
    pub fn negation_targets(&self, g: &AmrGraph) -> Vec<Variable> {
        g.instances()
            .iter()
            .filter(|(v, c)| self.config.is_content_concept(c) && !g.has_negative_polarity(v))
            .map(|(v, _)| v.clone())
            .collect()
    }

    /// Unordered node pairs with distinct concepts, in variable order.
    pub fn swap_pairs(&self, g: &AmrGraph) -> Vec<(Variable, Variable)> {
        let nodes: Vec<(&Variable, &String)> = g.instances().iter().collect();
        let mut pairs = Vec::new();
        for (i, (u, cu)) in nodes.iter().enumerate() {
            for (v, cv) in &nodes[i + 1..] {
                if cu != cv {
                    pairs.push(((*u).clone(), (*v).clone()));
                }
            }
        }
        pairs
    }

    /// Non-root leaves whose removal leaves the rest connected.
    pub fn removable_leaves(&self, g: &AmrGraph) -> Vec<Variable> {
        if g.node_count() < 2 {
            return Vec::new();
        }
        g.instances()
            .keys()
            .filter(|v| *v != g.root() && g.is_leaf(v))
            .filter(|v| g.reachable_from_root(Some(v)).len() == g.node_count() - 1)
            .cloned()
            .collect()
    }

    /// Replacement concepts per eligible node for AR or HS.
    pub fn relabel_options(&self, g: &AmrGraph, kind: ManipulationType) -> Vec<(Variable, Vec<String>)> {
        let Some(db) = self.wordnet else {
            return Vec::new();
        };
        g.instances()
            .iter()
            .filter(|(_, c)| self.config.is_content_concept(c))
            .filter_map(|(v, concept)| {
                let options = self.lexical_options(db, concept, kind);
                (!options.is_empty()).then(|| (v.clone(), options))
            })
            .collect()
    }

    fn lexical_options(&self, db: &WordnetDb, concept: &str, kind: ManipulationType) -> Vec<String> {
        let (stem, suffix) = split_sense(concept);
        for &pos in pos_order(concept) {
            let Ok(key) = LemmaKey::new(stem, pos) else {
                return Vec::new();
            };
            let lemmas = match kind {
                ManipulationType::AR => db.antonyms_with(&key, self.config.antonym_scope),
                ManipulationType::HS => db.hypernyms_to_depth(&key, self.config.hypernym_depth.max(1)),
                _ => return Vec::new(),
            };
            // single-token replacements only
            let options: Vec<String> = lemmas
                .into_iter()
                .filter(|l| !l.contains('_') && l.chars().all(|c| c.is_alphanumeric() || c == '-'))
                .map(|l| format!("{l}{suffix}"))
                .filter(|c| c != concept)
                .collect();
            if !options.is_empty() {
                return options;
            }
        }
        Vec::new()
    }

    /// Picks the edit a seeded run of `kind` would make.
    pub fn choose(&self, g: &AmrGraph, kind: ManipulationType, seed: u64) -> Result<Edit, TransformError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match kind {
            ManipulationType::PN => self
                .negation_targets(g)
                .choose(&mut rng)
                .cloned()
                .map(Edit::Negate)
                .ok_or_else(|| not_applicable(kind, "no non-pronoun node without negative polarity")),
            ManipulationType::RS => self
                .swap_pairs(g)
                .choose(&mut rng)
                .cloned()
                .map(|(u, v)| Edit::Swap(u, v))
                .ok_or_else(|| not_applicable(kind, "fewer than two distinct concepts")),
            ManipulationType::US => self
                .removable_leaves(g)
                .choose(&mut rng)
                .cloned()
                .map(Edit::Remove)
                .ok_or_else(|| not_applicable(kind, "no removable leaf")),
            ManipulationType::AR | ManipulationType::HS => {
                if self.wordnet.is_none() {
                    return Err(not_applicable(kind, "no WordNet database configured"));
                }
                let options = self.relabel_options(g, kind);
                let (target, concepts) = options
                    .choose(&mut rng)
                    .ok_or_else(|| not_applicable(kind, "no node has a WordNet replacement"))?;
                let concept = concepts[rng.gen_range(0..concepts.len())].clone();
                Ok(Edit::Relabel { kind, target: target.clone(), concept })
            }
        }
    }

    /// Applies `kind` with a seeded choice of target.
    pub fn apply(&self, g: &AmrGraph, kind: ManipulationType, seed: u64) -> Result<(AmrGraph, AppliedManipulation), TransformError> {
        let edit = self.choose(g, kind, seed)?;
        apply_edit(g, &edit, seed)
    }

    /// Tries the allowed kinds in a seeded random order and returns the first
    /// that applies.
    pub fn apply_random(
        &self,
        g: &AmrGraph,
        seed: u64,
        allowed: &BTreeSet<ManipulationType>,
    ) -> Result<(AmrGraph, AppliedManipulation), TransformError> {
        if allowed.is_empty() {
            return Err(TransformError::NothingAllowed);
        }
        let mut order: Vec<ManipulationType> = allowed.iter().copied().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        order.shuffle(&mut rng);
        for kind in order {
            match self.apply(g, kind, seed) {
                Ok(result) => return Ok(result),
                Err(TransformError::NotApplicable { .. }) => continue,
                Err(other) => return Err(other),
            }
        }
        Err(TransformError::NoManipulationApplicable)
    }

    /// Applies several manipulations in order, feeding each output forward.
    pub fn compose(
        &self,
        g: &AmrGraph,
        steps: &[(ManipulationType, u64)],
    ) -> Result<(AmrGraph, Vec<AppliedManipulation>), TransformError> {
        let mut current = g.clone();
        let mut log = Vec::with_capacity(steps.len());
        for &(kind, seed) in steps {
            let (next, applied) = self.apply(&current, kind, seed)?;
            current = next;
            log.push(applied);
        }
        Ok((current, log))
    }
}

fn instance_triple(var: &Variable, concept: &str) -> Triple {
    Triple {
        source: var.clone(),
        role: Role::new(":instance"),
        target: TripleTarget::Concept(concept.to_string()),
    }
}

/// Performs one concrete edit.
pub fn apply_edit(g: &AmrGraph, edit: &Edit, seed: u64) -> Result<(AmrGraph, AppliedManipulation), TransformError> {
    let concept_of = |v: &Variable| {
        g.concept(v)
            .map(str::to_string)
            .ok_or_else(|| TransformError::InvalidTarget(format!("no node `{v}`")))
    };
    let mut out = g.clone();
    let (targets, before, after) = match edit {
        Edit::Negate(v) => {
            concept_of(v)?;
            if g.has_negative_polarity(v) {
                return Err(TransformError::InvalidTarget(format!("`{v}` is already negated")));
            }
            let attribute = Attribute::new(v.clone(), Role::polarity(), Constant::negative());
            out.insert_attribute(attribute);
            let added = Triple {
                source: v.clone(),
                role: Role::polarity(),
                target: TripleTarget::Constant(Constant::negative()),
            };
            (vec![v.clone()], vec![], vec![added])
        }
        Edit::Swap(u, v) => {
            let (cu, cv) = (concept_of(u)?, concept_of(v)?);
            if cu == cv {
                return Err(TransformError::InvalidTarget(format!("`{u}` and `{v}` share concept `{cu}`")));
            }
            out.set_concept(u, cv.clone());
            out.set_concept(v, cu.clone());
            (
                vec![u.clone(), v.clone()],
                vec![instance_triple(u, &cu), instance_triple(v, &cv)],
                vec![instance_triple(u, &cv), instance_triple(v, &cu)],
            )
        }
        Edit::Remove(v) => {
            let concept = concept_of(v)?;
            if v == g.root() || !g.is_leaf(v) {
                return Err(TransformError::InvalidTarget(format!("`{v}` is not a removable leaf")));
            }
            let mut removed = vec![instance_triple(v, &concept)];
            removed.extend(g.to_triples().into_iter().filter(|t| {
                t.role.as_str() != ":instance"
                    && (&t.source == v || matches!(&t.target, TripleTarget::Variable(x) if x == v))
            }));
            out.remove_node(v);
            (vec![v.clone()], removed, vec![])
        }
        Edit::Relabel { target, concept, .. } => {
            let old = concept_of(target)?;
            if &old == concept {
                return Err(TransformError::InvalidTarget(format!("`{target}` already has concept `{concept}`")));
            }
            out.set_concept(target, concept.clone());
            (vec![target.clone()], vec![instance_triple(target, &old)], vec![instance_triple(target, concept)])
        }
    };
    out.validate().map_err(|e| TransformError::InvalidTarget(e.to_string()))?;
    Ok((out, AppliedManipulation { kind: edit.kind(), targets, before, after, rng_seed: seed }))
}

/// PN with the default configuration.
pub fn polarity_negation(g: &AmrGraph, seed: u64) -> Result<(AmrGraph, AppliedManipulation), TransformError> {
    Transformer::new(&TransformConfig::default(), None).apply(g, ManipulationType::PN, seed)
}

/// RS with the default configuration.
pub fn role_swap(g: &AmrGraph, seed: u64) -> Result<(AmrGraph, AppliedManipulation), TransformError> {
    Transformer::new(&TransformConfig::default(), None).apply(g, ManipulationType::RS, seed)
}

/// US with the default configuration.
pub fn underspecification(g: &AmrGraph, seed: u64) -> Result<(AmrGraph, AppliedManipulation), TransformError> {
    Transformer::new(&TransformConfig::default(), None).apply(g, ManipulationType::US, seed)
}

/// AR with the default configuration.
pub fn antonym_replacement(
    g: &AmrGraph,
    db: &WordnetDb,
    seed: u64,
) -> Result<(AmrGraph, AppliedManipulation), TransformError> {
    Transformer::new(&TransformConfig::default(), Some(db)).apply(g, ManipulationType::AR, seed)
}

/// HS with the default configuration.
pub fn hypernym_substitution(
    g: &AmrGraph,
    db: &WordnetDb,
    seed: u64,
) -> Result<(AmrGraph, AppliedManipulation), TransformError> {
    Transformer::new(&TransformConfig::default(), Some(db)).apply(g, ManipulationType::HS, seed)
}

/// Seeded choice among `allowed` with the default configuration.
pub fn apply_random(
    g: &AmrGraph,
    db: Option<&WordnetDb>,
    seed: u64,
    allowed: &BTreeSet<ManipulationType>,
) -> Result<(AmrGraph, AppliedManipulation), TransformError> {
    Transformer::new(&TransformConfig::default(), db).apply_random(g, seed, allowed)
}
