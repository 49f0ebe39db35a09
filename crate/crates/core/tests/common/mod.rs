#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use amrfoil::backends::{Backends, FixtureEntry, FixtureTransport, Request};
use amrfoil::penman;
use amrfoil::pipeline::{Dataset, ParaphrasePair};
use amrfoil::transforms::ManipulationType;
use amrfoil::wordnet::{load_database, WordnetDb};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn mini_wordnet() -> WordnetDb {
    load_database(&fixture("wordnet-mini")).expect("bundled WordNet subset")
}

pub const EXAMPLE_SENTENCE: &str = "I'm happy that things are going so well";
pub const EXAMPLE_PAIR_ID: &str = "happy-example";

/// Global seed that makes each manipulation hit the node the worked example
/// changes, with the expected generated sentence.
pub const EXAMPLE_CASES: [(ManipulationType, u64, &str); 5] = [
    (ManipulationType::PN, 5, "I'm happy things aren't going so well for me"),
    (ManipulationType::RS, 12, "So happy things are going so well for me"),
    (ManipulationType::US, 2, "Happy things are going so well"),
    (ManipulationType::AR, 6, "I’m happy things are stopping so well"),
    (ManipulationType::HS, 28, "I’m happy the attributes are going so well"),
];

pub fn example_pair() -> ParaphrasePair {
    ParaphrasePair::new(EXAMPLE_PAIR_ID, EXAMPLE_SENTENCE, "Things are going really well, and that makes me glad", Dataset::Custom)
        .unwrap()
}

pub fn example_backends() -> Backends {
    Backends::new(Arc::new(FixtureTransport::load(&fixture("happy_example.jsonl")).unwrap()))
}

/// Fixture entries for a parser and generator that map `sentence` to
/// `graph` and each foil graph to its text. Graphs are normalized through
/// the PENMAN writer, as the pipeline sends them.
pub fn scripted(sentence: &str, graph: &str, foils: &[(&str, &str)]) -> Vec<FixtureEntry> {
    let mut entries = vec![FixtureEntry::new(&Request::Parse { sentence: sentence.into() }, graph.into())];
    for (foil_graph, text) in foils {
        let normalized = penman::serialize(&penman::parse(foil_graph).unwrap());
        entries.push(FixtureEntry::new(&Request::Generate { graph: normalized }, (*text).into()));
    }
    entries
}

pub fn nli_entry(premise: &str, hypothesis: &str, probs: [f64; 3]) -> FixtureEntry {
    FixtureEntry::new(
        &Request::Nli { premise: premise.into(), hypothesis: hypothesis.into() },
        serde_json::json!(probs),
    )
}

pub fn backends(entries: Vec<FixtureEntry>) -> Backends {
    Backends::new(Arc::new(FixtureTransport::from_entries(entries)))
}

const CONCEPTS: &[&str] = &[
    "happy-01", "go-01", "well-09", "thing", "boy", "girl", "cat", "bite-01", "come-01", "big", "small", "good",
    "bad", "cold", "hot", "snake", "tiger", "want-01", "so", "person", "i", "you", "they", "city", "believe-01",
    "date-entity", "and", "stop-01", "tall", "short", "ill", "child", "animal",
];
const ROLES: &[&str] = &[":ARG0", ":ARG1", ":ARG2", ":mod", ":manner", ":time", ":location", ":op1", ":degree", ":consist-of"];

/// A random well-formed graph: a spanning tree plus occasional reentrant
/// edges and attributes, with concepts drawn from a small vocabulary that
/// overlaps the bundled WordNet subset.
pub fn random_graph(rng: &mut impl rand::Rng) -> amrfoil::AmrGraph {
    use rand::seq::SliceRandom;
    let n = rng.gen_range(1..=12);
    let vars: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut builder = amrfoil::AmrGraph::builder(vars[0].as_str());
    for v in &vars {
        builder = builder.instance(v.as_str(), *CONCEPTS.choose(rng).unwrap());
    }
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        let (s, t) = if rng.gen_bool(0.15) { (i, parent) } else { (parent, i) };
        builder = builder.relation(vars[s].as_str(), *ROLES.choose(rng).unwrap(), vars[t].as_str());
    }
    if n > 2 && rng.gen_bool(0.3) {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b {
            builder = builder.relation(vars[a].as_str(), ":ARG1", vars[b].as_str());
        }
    }
    for v in &vars {
        match rng.gen_range(0..10) {
            0 => builder = builder.attribute(v.as_str(), ":polarity", "-"),
            1 => builder = builder.attribute(v.as_str(), ":quant", rng.gen_range(1..100).to_string().as_str()),
            2 => builder = builder.attribute(v.as_str(), ":name", "\"Big Apple\""),
            3 => builder = builder.attribute(v.as_str(), ":mode", "imperative"),
            _ => {}
        }
    }
    builder.build().expect("generated graph is valid")
}

pub fn seeded_graph(seed: u64) -> amrfoil::AmrGraph {
    use rand::SeedableRng;
    random_graph(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed))
}

/// Hand-written corpus covering inverse roles, reentrancy, quoted strings,
/// metadata and `:wiki`.
pub fn handwritten_corpus() -> Vec<String> {
    let text = std::fs::read_to_string(fixture("corpus.amr")).unwrap();
    text.split("\n\n").map(str::trim).filter(|b| !b.is_empty()).map(String::from).collect()
}

fn negations(g: &amrfoil::AmrGraph) -> usize {
    g.attributes().iter().filter(|a| a.role.as_str() == ":polarity" && a.value.as_str() == "-").count()
}

/// Checks the structural delta one manipulation promises. `Ok(false)` means
/// the manipulation does not apply to `g`.
pub fn check_manipulation(
    t: &amrfoil::transforms::Transformer,
    g: &amrfoil::AmrGraph,
    kind: ManipulationType,
    seed: u64,
) -> Result<bool, String> {
    use amrfoil::transforms::TransformError;
    let (out, applied) = match t.apply(g, kind, seed) {
        Ok(result) => result,
        Err(TransformError::NotApplicable { .. }) => return Ok(false),
        Err(e) => return Err(format!("{kind}: {e}")),
    };
    let again = t.apply(g, kind, seed).map_err(|e| e.to_string())?;
    if again.0 != out || again.1 != applied {
        return Err(format!("{kind}: not deterministic for seed {seed}"));
    }
    out.validate().map_err(|e| format!("{kind}: invalid output: {e}"))?;
    if applied.kind != kind {
        return Err(format!("{kind}: reported as {}", applied.kind));
    }
    let changed_labels =
        g.instances().iter().filter(|(v, c)| out.instances().get(*v).is_some_and(|d| d != *c)).count();
    let same_structure = out.relations() == g.relations();
    match kind {
        ManipulationType::PN => {
            if negations(&out) != negations(g) + 1 || !same_structure || out.instances() != g.instances() {
                return Err(format!("PN: expected exactly one added polarity, seed {seed}"));
            }
        }
        ManipulationType::RS => {
            let labels = |x: &amrfoil::AmrGraph| {
                let mut v: Vec<String> = x.instances().values().cloned().collect();
                v.sort();
                v
            };
            if labels(&out) != labels(g) || !same_structure || changed_labels != 2 {
                return Err(format!("RS: label multiset or structure changed, seed {seed}"));
            }
        }
        ManipulationType::US => {
            if out.node_count() + 1 != g.node_count() {
                return Err(format!("US: expected one node fewer, seed {seed}"));
            }
            let dangling = out.relations().iter().any(|r| !out.contains(&r.source) || !out.contains(&r.target))
                || out.attributes().iter().any(|a| !out.contains(&a.source));
            if dangling {
                return Err(format!("US: dangling edge, seed {seed}"));
            }
        }
        ManipulationType::AR | ManipulationType::HS => {
            if changed_labels != 1 || out.node_count() != g.node_count() || !same_structure {
                return Err(format!("{kind}: expected exactly one relabelled node, seed {seed}"));
            }
        }
    }
    Ok(true)
}
