//! Foil induction: paraphrase pairs in, NLI-filtered foil records out.
//!
//! For every pair (s, p) the source sentence is parsed, one manipulation is
//! applied, and the manipulated graph is generated back to text f. An NLI
//! check of f against s decides whether the record is retained.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::backends::{BackendError, Backends, NliLabel, NliVerdict};
use crate::penman::{self, ParseOptions};
use crate::transforms::{AppliedManipulation, ManipulationType, TransformConfig, TransformError, Transformer};
use crate::wordnet::WordnetDb;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid pair {id}: {message}")]
    InvalidPair { id: String, message: String },
    #[error("invalid filter: {0}")]
    InvalidFilter(String),
    #[error("{path}:{line}: {message}")]
    Input { path: String, line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("foil graph: {0}")]
    Graph(#[from] penman::PenmanError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Paws,
    Gptp,
    #[default]
    Custom,
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dataset::Paws => "PAWS",
            Dataset::Gptp => "GPTP",
            Dataset::Custom => "custom",
        })
    }
}

impl FromStr for Dataset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "paws" => Ok(Dataset::Paws),
            "gptp" => Ok(Dataset::Gptp),
            "custom" => Ok(Dataset::Custom),
            other => Err(format!("unknown dataset `{other}`")),
        }
    }
}

/// A positive paraphrase pair (s, p).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParaphrasePair {
    pub id: String,
    pub source: String,
    pub paraphrase: String,
    #[serde(default)]
    pub dataset: Dataset,
}

impl ParaphrasePair {
    pub fn new(
        id: impl Into<String>,
        source: impl Into<String>,
        paraphrase: impl Into<String>,
        dataset: Dataset,
    ) -> Result<Self, PipelineError> {
        let pair = ParaphrasePair { id: id.into(), source: source.into(), paraphrase: paraphrase.into(), dataset };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.source.trim().is_empty() || self.paraphrase.trim().is_empty() {
            return Err(PipelineError::InvalidPair { id: self.id.clone(), message: "empty text".into() });
        }
        Ok(())
    }
}

/// Keeps verdicts whose label is `target_label` and whose probability for
/// that label lies in the half-open interval (`prob_low`, `prob_high`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    pub name: String,
    pub target_label: NliLabel,
    pub prob_low: f64,
    pub prob_high: f64,
}

impl FilterSpec {
    pub fn new(name: impl Into<String>, target_label: NliLabel, prob_low: f64, prob_high: f64) -> Result<Self, PipelineError> {
        let spec = FilterSpec { name: name.into(), target_label, prob_low, prob_high };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let in_unit = |p: f64| (0.0..=1.0).contains(&p);
        if !in_unit(self.prob_low) || !in_unit(self.prob_high) || self.prob_low > self.prob_high {
            return Err(PipelineError::InvalidFilter(format!(
                "{}: need 0 <= low <= high <= 1, got ({}, {}]",
                self.name, self.prob_low, self.prob_high
            )));
        }
        Ok(())
    }

    /// Contradiction with more than 90% confidence.
    pub fn main() -> Self {
        FilterSpec { name: "main".into(), target_label: NliLabel::Contradiction, prob_low: 0.90, prob_high: 1.0 }
    }

    /// Neutral with a confidence between 50% and 80%.
    pub fn neutral_ablation() -> Self {
        FilterSpec { name: "neutral-ablation".into(), target_label: NliLabel::Neutral, prob_low: 0.50, prob_high: 0.80 }
    }

    /// `main` or `neutral-ablation`.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "main" => Some(FilterSpec::main()),
            "neutral-ablation" => Some(FilterSpec::neutral_ablation()),
            _ => None,
        }
    }

    pub fn accepts(&self, nli: &NliVerdict) -> bool {
        contradiction_filter(nli, self)
    }
}

/// True iff the verdict's label is the spec's target and the target-class
/// probability lies in (low, high].
pub fn contradiction_filter(nli: &NliVerdict, spec: &FilterSpec) -> bool {
    let p = nli.prob(spec.target_label);
    nli.label() == spec.target_label && p > spec.prob_low && p <= spec.prob_high
}

/// Which text the foil is checked against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NliReference {
    #[default]
    Source,
    Paraphrase,
}

/// A foil with the graphs that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Foil {
    pub text: String,
    pub manipulation: AppliedManipulation,
    pub source_graph: String,
    pub foil_graph: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoilRecord {
    pub pair_id: String,
    #[serde(default)]
    pub dataset: Dataset,
    pub source: String,
    pub paraphrase: String,
    pub foil: String,
    pub manipulation: AppliedManipulation,
    pub source_graph: String,
    pub foil_graph: String,
    pub nli: NliVerdict,
    pub retained: bool,
    pub filter_name: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureReason {
    ParseFail,
    GenerateFail,
    NotApplicable,
    NliFail,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureReason::ParseFail => "parse-fail",
            FailureReason::GenerateFail => "generate-fail",
            FailureReason::NotApplicable => "not-applicable",
            FailureReason::NliFail => "nli-fail",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub pair_id: String,
    pub reason: FailureReason,
    pub message: String,
}

/// Runs s → parse → manipulate → generate. The parser's graph is read with
/// `:wiki` links dropped; the generator receives the manipulated graph
/// without metadata.
pub fn transform_sentence(
    sentence: &str,
    backends: &Backends,
    transformer: &Transformer<'_>,
    seed: u64,
    allowed: &BTreeSet<ManipulationType>,
) -> Result<Foil, (FailureReason, String)> {
    let source_graph = backends
        .parse_text(sentence)
        .map_err(|e| (FailureReason::ParseFail, e.to_string()))?;
    let graph = penman::parse_with(&source_graph, &ParseOptions { strip_wiki: true })
        .map_err(|e| (FailureReason::ParseFail, e.to_string()))?;
    let (mut manipulated, manipulation) = transformer
        .apply_random(&graph, seed, allowed)
        .map_err(|e| (FailureReason::NotApplicable, e.to_string()))?;
    manipulated.set_metadata(Vec::new());
    let foil_graph = penman::serialize(&manipulated);
    let text = backends
        .generate_text(&foil_graph)
        .map_err(|e| (FailureReason::GenerateFail, e.to_string()))?;
    if text.trim() == sentence.trim() {
        return Err((FailureReason::GenerateFail, "generated foil equals the source sentence".into()));
    }
    Ok(Foil { text, manipulation, source_graph, foil_graph })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InduceConfig {
    pub seed: u64,
    pub filter: FilterSpec,
    pub allowed: BTreeSet<ManipulationType>,
    pub nli_reference: NliReference,
    /// Pairs processed concurrently.
    pub workers: usize,
    pub transform: TransformConfig,
}

impl Default for InduceConfig {
    fn default() -> Self {
        InduceConfig {
            seed: 0,
            filter: FilterSpec::main(),
            allowed: ManipulationType::ALL.into_iter().collect(),
            nli_reference: NliReference::Source,
            workers: 8,
            transform: TransformConfig::default(),
        }
    }
}

/// Seed for one pair: the global seed xor a stable hash of the pair id.
pub fn pair_seed(global_seed: u64, pair_id: &str) -> u64 {
    let digest = Sha256::digest(pair_id.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    global_seed ^ u64::from_le_bytes(bytes)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InduceOutcome {
    /// One record per pair that produced a foil, in input order.
    pub records: Vec<FoilRecord>,
    pub failures: Vec<Failure>,
}

impl InduceOutcome {
    pub fn retained(&self) -> impl Iterator<Item = &FoilRecord> {
        self.records.iter().filter(|r| r.retained)
    }
}

pub fn induce_pair(
    pair: &ParaphrasePair,
    config: &InduceConfig,
    backends: &Backends,
    transformer: &Transformer<'_>,
) -> Result<FoilRecord, Failure> {
    let fail = |(reason, message): (FailureReason, String)| Failure { pair_id: pair.id.clone(), reason, message };
    let seed = pair_seed(config.seed, &pair.id);
    let foil = transform_sentence(&pair.source, backends, transformer, seed, &config.allowed).map_err(fail)?;
    let reference = match config.nli_reference {
        NliReference::Source => &pair.source,
        NliReference::Paraphrase => &pair.paraphrase,
    };
    let nli = backends
        .nli_check(reference, &foil.text)
        .map_err(|e| fail((FailureReason::NliFail, e.to_string())))?;
    Ok(FoilRecord {
        pair_id: pair.id.clone(),
        dataset: pair.dataset,
        source: pair.source.clone(),
        paraphrase: pair.paraphrase.clone(),
        foil: foil.text,
        manipulation: foil.manipulation,
        source_graph: foil.source_graph,
        foil_graph: foil.foil_graph,
        retained: config.filter.accepts(&nli),
        nli,
        filter_name: config.filter.name.clone(),
    })
}

/// Attempts one foil per pair on a bounded worker pool. Per-pair failures are
/// collected with a reason code; only setup problems are errors.
pub fn induce_dataset(
    pairs: &[ParaphrasePair],
    config: &InduceConfig,
    backends: &Backends,
    wordnet: Option<&WordnetDb>,
) -> Result<InduceOutcome, PipelineError> {
    config.filter.validate()?;
    for pair in pairs {
        pair.validate()?;
    }
    let transformer = Transformer::new(&config.transform, wordnet);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    let results: Vec<Result<FoilRecord, Failure>> =
        pool.install(|| pairs.par_iter().map(|pair| induce_pair(pair, config, backends, &transformer)).collect());

    let mut outcome = InduceOutcome::default();
    for result in results {
        match result {
            Ok(record) => outcome.records.push(record),
            Err(failure) => {
                tracing::info!(pair = %failure.pair_id, reason = %failure.reason, "{}", failure.message);
                outcome.failures.push(failure);
            }
        }
    }
    Ok(outcome)
}

/// Retained count and manipulation distribution of one dataset.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub total: usize,
    pub counts: BTreeMap<ManipulationType, usize>,
    /// Percent of `total` per manipulation; every kind is present.
    pub percentages: BTreeMap<ManipulationType, f64>,
}

/// Statistics over the retained records.
pub fn dataset_stats<'a>(records: impl IntoIterator<Item = &'a FoilRecord>) -> StatsReport {
    let mut counts: BTreeMap<ManipulationType, usize> = ManipulationType::ALL.iter().map(|k| (*k, 0)).collect();
    let mut total = 0;
    for record in records.into_iter().filter(|r| r.retained) {
        *counts.entry(record.manipulation.kind).or_default() += 1;
        total += 1;
    }
    let percentages = counts
        .iter()
        .map(|(kind, n)| (*kind, if total == 0 { 0.0 } else { 100.0 * *n as f64 / total as f64 }))
        .collect();
    StatsReport { total, counts, percentages }
}

/// Renders one row per dataset:
/// `name  total  PN %  RS %  US %  AR %  HS %`.
pub fn render_stats_table(rows: &[(String, StatsReport)]) -> String {
    let mut out = format!("{:<8} {:>8}", "", "total");
    for kind in ManipulationType::ALL {
        out.push_str(&format!(" {:>6}", format!("{kind} %")));
    }
    out.push('\n');
    for (name, report) in rows {
        out.push_str(&format!("{:<8} {:>8}", name, thousands(report.total)));
        for kind in ManipulationType::ALL {
            out.push_str(&format!(" {:>6.1}", report.percentages.get(&kind).copied().unwrap_or(0.0)));
        }
        out.push('\n');
    }
    out
}

fn thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.display().to_string(), source }
}

fn input_error(path: &Path, line: usize, message: impl Into<String>) -> PipelineError {
    PipelineError::Input { path: path.display().to_string(), line, message: message.into() }
}

fn text_field<'v>(row: &'v Value, names: &[&str]) -> Option<&'v str> {
    names.iter().find_map(|n| row.get(*n).and_then(Value::as_str))
}

fn is_positive(label: Option<&Value>) -> bool {
    match label {
        None | Some(Value::Null) => true,
        Some(Value::Number(n)) => n.as_i64() == Some(1),
        Some(Value::String(s)) => s.trim() == "1",
        Some(Value::Bool(b)) => *b,
        _ => false,
    }
}

/// Reads JSON-lines pairs. Accepted field names: `id`; `source`,
/// `sentence1` or `text`; `paraphrase` or `sentence2`; optional `label`
/// (only label 1 is kept) and `dataset`. Rows without an id are numbered.
pub fn read_pairs_jsonl(path: &Path, dataset: Dataset) -> Result<Vec<ParaphrasePair>, PipelineError> {
    let file = fs::File::open(path).map_err(io_error(path))?;
    let mut pairs = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_error(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Value = serde_json::from_str(&line).map_err(|e| input_error(path, n + 1, e.to_string()))?;
        if !is_positive(row.get("label")) {
            continue;
        }
        let id = match row.get("id") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(x)) => x.to_string(),
            _ => format!("{}", n + 1),
        };
        let source = text_field(&row, &["source", "sentence1", "text"])
            .ok_or_else(|| input_error(path, n + 1, "missing source sentence"))?;
        let paraphrase = text_field(&row, &["paraphrase", "sentence2"])
            .ok_or_else(|| input_error(path, n + 1, "missing paraphrase"))?;
        let dataset = match row.get("dataset").and_then(Value::as_str) {
            Some(name) => name.parse().map_err(|e: String| input_error(path, n + 1, e))?,
            None => dataset,
        };
        pairs.push(
            ParaphrasePair::new(id, source, paraphrase, dataset)
                .map_err(|e| input_error(path, n + 1, e.to_string()))?,
        );
    }
    Ok(pairs)
}

/// Reads PAWS-style TSV (`id sentence1 sentence2 label` with a header row)
/// and keeps the positive pairs.
pub fn read_pairs_tsv(path: &Path, dataset: Dataset) -> Result<Vec<ParaphrasePair>, PipelineError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| input_error(path, 1, e.to_string()))?;
    let headers = reader.headers().map_err(|e| input_error(path, 1, e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| input_error(path, 1, format!("missing column `{name}`")))
    };
    let (id_col, s1, s2) = (column("id")?, column("sentence1")?, column("sentence2")?);
    let label_col = headers.iter().position(|h| h.trim() == "label");
    let mut pairs = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let line = n + 2;
        let row = row.map_err(|e| input_error(path, line, e.to_string()))?;
        let field = |i: usize| row.get(i).ok_or_else(|| input_error(path, line, "short row"));
        if let Some(col) = label_col {
            if field(col)?.trim() != "1" {
                continue;
            }
        }
        pairs.push(
            ParaphrasePair::new(field(id_col)?.trim(), field(s1)?, field(s2)?, dataset)
                .map_err(|e| input_error(path, line, e.to_string()))?,
        );
    }
    Ok(pairs)
}

/// Reads the ChatGPT paraphrase CSV (`text`, `paraphrases` holding a
/// Python-style list of strings). Each row yields one pair with the first
/// paraphrase; ids are `gptp-<row>`.
pub fn read_pairs_gptp_csv(path: &Path) -> Result<Vec<ParaphrasePair>, PipelineError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| input_error(path, 1, e.to_string()))?;
    let headers = reader.headers().map_err(|e| input_error(path, 1, e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| input_error(path, 1, format!("missing column `{name}`")))
    };
    let (text_col, para_col) = (column("text")?, column("paraphrases")?);
    let mut pairs = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let line = n + 2;
        let row = row.map_err(|e| input_error(path, line, e.to_string()))?;
        let text = row.get(text_col).unwrap_or_default();
        let list = parse_string_list(row.get(para_col).unwrap_or_default())
            .ok_or_else(|| input_error(path, line, "malformed paraphrase list"))?;
        let Some(first) = list.into_iter().find(|p| !p.trim().is_empty()) else {
            continue;
        };
        pairs.push(
            ParaphrasePair::new(format!("gptp-{}", n + 1), text, first, Dataset::Gptp)
                .map_err(|e| input_error(path, line, e.to_string()))?,
        );
    }
    Ok(pairs)
}

/// Reads pairs by extension: `.tsv`, `.csv` (GPTP layout) or JSON-lines.
pub fn read_pairs(path: &Path, dataset: Dataset) -> Result<Vec<ParaphrasePair>, PipelineError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("tsv") => read_pairs_tsv(path, dataset),
        Some("csv") => read_pairs_gptp_csv(path),
        _ => read_pairs_jsonl(path, dataset),
    }
}

/// Parses `['a', "b's"]`. Returns None on malformed input.
fn parse_string_list(input: &str) -> Option<Vec<String>> {
    let mut chars = input.trim().chars().peekable();
    if chars.next()? != '[' {
        return None;
    }
    let mut items = Vec::new();
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace() || *c == ',') {
            chars.next();
        }
        match chars.next()? {
            ']' => return Some(items),
            quote @ ('\'' | '"') => {
                let mut item = String::new();
                loop {
                    match chars.next()? {
                        '\\' => match chars.next()? {
                            'n' => item.push('\n'),
                            't' => item.push('\t'),
                            other => item.push(other),
                        },
                        c if c == quote => break,
                        c => item.push(c),
                    }
                }
                items.push(item);
            }
            _ => return None,
        }
    }
}

/// Reads FoilRecords from JSON-lines.
pub fn read_records(path: &Path) -> Result<Vec<FoilRecord>, PipelineError> {
    let file = fs::File::open(path).map_err(io_error(path))?;
    let mut records = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_error(path))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| input_error(path, n + 1, e.to_string()))?);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict(p: [f64; 3]) -> NliVerdict {
        NliVerdict::from_probs(p).unwrap()
    }

    #[test]
    fn filter_examples() {
        assert!(contradiction_filter(&verdict([0.95, 0.03, 0.02]), &FilterSpec::main()));
        assert!(contradiction_filter(&verdict([0.10, 0.65, 0.25]), &FilterSpec::neutral_ablation()));
        assert!(!contradiction_filter(&verdict([0.02, 0.02, 0.96]), &FilterSpec::main()));
        // Interval is open below, closed above.
        assert!(!contradiction_filter(&verdict([0.90, 0.05, 0.05]), &FilterSpec::main()));
        assert!(contradiction_filter(&verdict([1.0, 0.0, 0.0]), &FilterSpec::main()));
        assert!(contradiction_filter(&verdict([0.1, 0.8, 0.1]), &FilterSpec::neutral_ablation()));
        assert!(!contradiction_filter(&verdict([0.45, 0.5, 0.05]), &FilterSpec::neutral_ablation()));
    }

    #[test]
    fn filter_validation() {
        assert!(FilterSpec::new("x", NliLabel::Neutral, 0.8, 0.5).is_err());
        assert!(FilterSpec::new("x", NliLabel::Neutral, -0.1, 0.5).is_err());
        assert!(FilterSpec::new("x", NliLabel::Neutral, 0.5, 0.5).is_ok());
        assert_eq!(FilterSpec::preset("neutral-ablation"), Some(FilterSpec::neutral_ablation()));
        assert_eq!(FilterSpec::preset("other"), None);
    }

    #[test]
    fn pair_seeds_depend_only_on_id() {
        assert_eq!(pair_seed(7, "a"), pair_seed(7, "a"));
        assert_ne!(pair_seed(7, "a"), pair_seed(7, "b"));
        assert_ne!(pair_seed(7, "a"), pair_seed(8, "a"));
    }

    #[test]
    fn empty_stats_are_zero() {
        let report = dataset_stats(std::iter::empty());
        assert_eq!(report.total, 0);
        assert!(report.percentages.values().all(|p| *p == 0.0));
        let table = render_stats_table(&[("PAWS".into(), report)]);
        assert!(table.starts_with("         "));
        assert!(table.contains("PN %"));
    }

    #[test]
    fn thousands_separator() {
        assert_eq!(thousands(1737), "1,737");
        assert_eq!(thousands(11456), "11,456");
        assert_eq!(thousands(999), "999");
        assert_eq!(thousands(1_000_000), "1,000,000");
    }

    #[test]
    fn python_string_lists() {
        assert_eq!(
            parse_string_list(r#"['a b', "it's", 'x\'y']"#),
            Some(vec!["a b".to_string(), "it's".to_string(), "x'y".to_string()])
        );
        assert_eq!(parse_string_list("[]"), Some(vec![]));
        assert_eq!(parse_string_list("['open"), None);
        assert_eq!(parse_string_list("nope"), None);
    }

    #[test]
    fn empty_pairs_are_rejected() {
        assert!(ParaphrasePair::new("1", " ", "x", Dataset::Custom).is_err());
    }
}
