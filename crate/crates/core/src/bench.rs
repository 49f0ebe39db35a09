//! Embedding-model evaluation on (s, p, f) triples.
//!
//! A model passes a triple when it scores the paraphrase closer to the source
//! than the foil. TACC counts those wins, AUC treats ℰ(s,p) as positives and
//! ℰ(s,f) as negatives, and the headline score is their harmonic mean.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{BackendError, Backends, Embedding};
use crate::pipeline::FoilRecord;
use crate::transforms::ManipulationType;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("vectors differ in length ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("cosine of a zero vector")]
    ZeroVector,
    #[error("{0} is empty")]
    Empty(&'static str),
    #[error("negative input {0}")]
    NegativeInput(f64),
    #[error("not a number in {0}")]
    NotANumber(&'static str),
    #[error("lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two items to rank")]
    TooShort,
    #[error("a ranking is constant; correlation undefined")]
    ConstantRanking,
    #[error("no tokens left in {0:?}")]
    EmptyTokens(String),
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error("embedding failed after {embedded} of {total} texts: {source}")]
    Backend {
        embedded: usize,
        total: usize,
        #[source]
        source: BackendError,
    },
}

/// Cosine similarity, computed in f64.
pub fn cosine(a: &[f32], b: &[f32]) -> Result<f64, BenchError> {
    if a.len() != b.len() {
        return Err(BenchError::DimensionMismatch(a.len(), b.len()));
    }
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (*x as f64, *y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(BenchError::ZeroVector);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

pub fn cosine_embeddings(a: &Embedding, b: &Embedding) -> Result<f64, BenchError> {
    cosine(&a.values, &b.values)
}

/// Similarities of one (s, p, f) triple.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTriple {
    pub sim_sp: f64,
    pub sim_sf: f64,
    #[serde(rename = "type")]
    pub kind: ManipulationType,
}

/// Fraction of triples with ℰ(s,p) > ℰ(s,f); ties count as failures.
pub fn tacc(triples: &[SimilarityTriple]) -> Result<f64, BenchError> {
    if triples.is_empty() {
        return Err(BenchError::Empty("triple set"));
    }
    let wins = triples.iter().filter(|t| t.sim_sp > t.sim_sf).count();
    Ok(wins as f64 / triples.len() as f64)
}

/// Area under the ROC curve as the Mann–Whitney statistic:
/// P(pos > neg) + ½·P(pos = neg), from midranks of the pooled scores.
pub fn auc(pos: &[f64], neg: &[f64]) -> Result<f64, BenchError> {
    if pos.is_empty() {
        return Err(BenchError::Empty("positive scores"));
    }
    if neg.is_empty() {
        return Err(BenchError::Empty("negative scores"));
    }
    if pos.iter().chain(neg).any(|x| x.is_nan()) {
        return Err(BenchError::NotANumber("scores"));
    }
    let mut pooled: Vec<(f64, bool)> = pos.iter().map(|&x| (x, true)).chain(neg.iter().map(|&x| (x, false))).collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Ranks are 1-based; tied runs share their mean rank. All sums stay
    // multiples of ½, so they are exact in f64.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j + 1 < pooled.len() && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let midrank = (i + j + 2) as f64 / 2.0;
        rank_sum += midrank * pooled[i..=j].iter().filter(|p| p.1).count() as f64;
        i = j + 1;
    }
    let (n, m) = (pos.len() as f64, neg.len() as f64);
    let u = rank_sum - n * (n + 1.0) / 2.0;
    Ok(u / (n * m))
}

/// 2ab/(a+b), and 0 when a + b = 0.
pub fn harmonic_mean(a: f64, b: f64) -> Result<f64, BenchError> {
    for x in [a, b] {
        if x.is_nan() {
            return Err(BenchError::NotANumber("harmonic mean input"));
        }
        if x < 0.0 {
            return Err(BenchError::NegativeInput(x));
        }
    }
    Ok(if a + b == 0.0 { 0.0 } else { 2.0 * a * b / (a + b) })
}

/// TACC per manipulation type, plus the unweighted mean over present types.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TypeBreakdown {
    pub tacc: BTreeMap<ManipulationType, f64>,
    pub counts: BTreeMap<ManipulationType, usize>,
    pub avg: f64,
}

pub fn per_type_tacc(triples: &[SimilarityTriple]) -> TypeBreakdown {
    let mut grouped: BTreeMap<ManipulationType, Vec<SimilarityTriple>> = BTreeMap::new();
    for t in triples {
        grouped.entry(t.kind).or_default().push(*t);
    }
    let mut breakdown = TypeBreakdown::default();
    for (kind, group) in grouped {
        breakdown.counts.insert(kind, group.len());
        breakdown.tacc.insert(kind, tacc(&group).expect("groups are non-empty"));
    }
    if !breakdown.tacc.is_empty() {
        breakdown.avg = breakdown.tacc.values().sum::<f64>() / breakdown.tacc.len() as f64;
    }
    breakdown
}

/// 1-based ranks, ties sharing their mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        for &k in &order[i..=j] {
            ranks[k] = (i + j + 2) as f64 / 2.0;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's ρ: Pearson correlation of average ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64, BenchError> {
    if a.len() != b.len() {
        return Err(BenchError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(BenchError::TooShort);
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(BenchError::NotANumber("rankings"));
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let mean = (a.len() as f64 + 1.0) / 2.0;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - mean) * (y - mean);
        va += (x - mean) * (x - mean);
        vb += (y - mean) * (y - mean);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(BenchError::ConstantRanking);
    }
    // sqrt of the product keeps the no-ties case exact (va = vb)
    Ok(cov / (va * vb).sqrt())
}

fn punctuation() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\p{P}").expect("valid pattern"))
}

/// Lowercases, deletes Unicode punctuation and splits on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    punctuation()
        .replace_all(&text.to_lowercase(), "")
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

const STOPWORD_LIST: &str = include_str!("stopwords_en.txt");

/// The embedded English stopword list, normalized like tokens (so
/// `don't` is stored as `dont`).
pub fn stopwords() -> &'static BTreeSet<String> {
    static WORDS: OnceLock<BTreeSet<String>> = OnceLock::new();
    WORDS.get_or_init(|| STOPWORD_LIST.lines().flat_map(tokenize).collect())
}

pub fn token_set(text: &str, use_stopwords_filter: bool) -> BTreeSet<String> {
    let mut set: BTreeSet<String> = tokenize(text).into_iter().collect();
    if use_stopwords_filter {
        set.retain(|t| !stopwords().contains(t));
    }
    set
}

/// |A ∩ B| / |A ∪ B| over token sets.
pub fn jaccard_similarity(a: &str, b: &str, use_stopwords_filter: bool) -> Result<f64, BenchError> {
    let (sa, sb) = (token_set(a, use_stopwords_filter), token_set(b, use_stopwords_filter));
    if sa.is_empty() {
        return Err(BenchError::EmptyTokens(a.to_string()));
    }
    if sb.is_empty() {
        return Err(BenchError::EmptyTokens(b.to_string()));
    }
    let shared = sa.intersection(&sb).count();
    Ok(shared as f64 / (sa.len() + sb.len() - shared) as f64)
}

/// 1 − Jaccard similarity.
pub fn jaccard_divergence(a: &str, b: &str, use_stopwords_filter: bool) -> Result<f64, BenchError> {
    Ok(1.0 - jaccard_similarity(a, b, use_stopwords_filter)?)
}

/// Mean Jaccard similarity over pairs; pairs with an empty token set are
/// skipped and counted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JaccardSummary {
    pub mean_similarity: f64,
    pub pairs: usize,
    pub skipped: usize,
}

pub fn mean_jaccard<'a>(
    pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    use_stopwords_filter: bool,
) -> Result<JaccardSummary, BenchError> {
    let (mut sum, mut n, mut skipped) = (0.0, 0usize, 0usize);
    for (a, b) in pairs {
        match jaccard_similarity(a, b, use_stopwords_filter) {
            Ok(j) => {
                sum += j;
                n += 1;
            }
            Err(BenchError::EmptyTokens(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if n == 0 {
        return Err(BenchError::Empty("pair list"));
    }
    Ok(JaccardSummary { mean_similarity: sum / n as f64, pairs: n, skipped })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_id: String,
    #[serde(default)]
    pub dataset: String,
    pub tacc: f64,
    pub auc: f64,
    pub hmean: f64,
    pub per_type_tacc: BTreeMap<ManipulationType, f64>,
    pub per_type_counts: BTreeMap<ManipulationType, usize>,
    /// Unweighted mean of `per_type_tacc`.
    pub per_type_avg: f64,
    pub n_triples: usize,
}

/// All metrics from precomputed similarities.
pub fn report_from_triples(model_id: &str, dataset: &str, triples: &[SimilarityTriple]) -> Result<EvalReport, BenchError> {
    let tacc = tacc(triples)?;
    let pos: Vec<f64> = triples.iter().map(|t| t.sim_sp).collect();
    let neg: Vec<f64> = triples.iter().map(|t| t.sim_sf).collect();
    let auc = auc(&pos, &neg)?;
    let breakdown = per_type_tacc(triples);
    Ok(EvalReport {
        model_id: model_id.to_string(),
        dataset: dataset.to_string(),
        tacc,
        auc,
        hmean: harmonic_mean(tacc, auc)?,
        per_type_tacc: breakdown.tacc,
        per_type_counts: breakdown.counts,
        per_type_avg: breakdown.avg,
        n_triples: triples.len(),
    })
}

/// Texts embedded per backend round; progress is reported between rounds.
const EMBED_CHUNK: usize = 256;

/// Embeds s, p and f of every retained record (each distinct text once)
/// and scores the model. Non-retained records are ignored.
pub fn evaluate_model(
    records: &[FoilRecord],
    backends: &Backends,
    model_id: &str,
    dataset: &str,
) -> Result<EvalReport, BenchError> {
    let retained: Vec<&FoilRecord> = records.iter().filter(|r| r.retained).collect();
    if retained.is_empty() {
        return Err(BenchError::Empty("retained record set"));
    }
    let mut texts: Vec<&str> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for r in &retained {
        for text in [r.source.as_str(), r.paraphrase.as_str(), r.foil.as_str()] {
            index.entry(text).or_insert_with(|| {
                texts.push(text);
                texts.len() - 1
            });
        }
    }
    let mut vectors: Vec<Embedding> = Vec::with_capacity(texts.len());
    for chunk in texts.chunks(EMBED_CHUNK) {
        let batch: Vec<String> = chunk.iter().map(|t| t.to_string()).collect();
        let embedded = backends
            .embed(&batch, model_id)
            .map_err(|source| BenchError::Backend { embedded: vectors.len(), total: texts.len(), source })?;
        vectors.extend(embedded);
        tracing::debug!(model = model_id, done = vectors.len(), total = texts.len(), "embedded");
    }
    let vector = |text: &str| &vectors[index[text]];
    let triples = retained
        .iter()
        .map(|r| {
            let s = vector(&r.source);
            Ok(SimilarityTriple {
                sim_sp: cosine_embeddings(s, vector(&r.paraphrase))?,
                sim_sf: cosine_embeddings(s, vector(&r.foil))?,
                kind: r.manipulation.kind,
            })
        })
        .collect::<Result<Vec<_>, BenchError>>()?;
    report_from_triples(model_id, dataset, &triples)
}

/// How per-dataset scores combine into one AVG score.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossDatasetMean {
    /// Matches the reported main results table.
    #[default]
    Harmonic,
    Arithmetic,
}

impl CrossDatasetMean {
    pub fn combine(self, values: &[f64]) -> Option<f64> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        Some(match self {
            CrossDatasetMean::Arithmetic => values.iter().sum::<f64>() / n,
            CrossDatasetMean::Harmonic => {
                if values.iter().any(|v| *v <= 0.0) {
                    0.0
                } else {
                    n / values.iter().map(|v| 1.0 / v).sum::<f64>()
                }
            }
        })
    }
}

/// Per model: the hmean of every dataset and their combination, sorted by
/// the combined score (best first, ties by model id).
pub fn cross_dataset_table(reports: &[EvalReport], mean: CrossDatasetMean) -> Vec<(String, BTreeMap<String, f64>, f64)> {
    let mut by_model: BTreeMap<&str, BTreeMap<String, f64>> = BTreeMap::new();
    for r in reports {
        by_model.entry(&r.model_id).or_default().insert(r.dataset.clone(), r.hmean);
    }
    let mut rows: Vec<(String, BTreeMap<String, f64>, f64)> = by_model
        .into_iter()
        .map(|(model, scores)| {
            let values: Vec<f64> = scores.values().copied().collect();
            let avg = mean.combine(&values).unwrap_or(0.0);
            (model.to_string(), scores, avg)
        })
        .collect();
    rows.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
    rows
}

pub const METRICS_CSV_HEADER: &str = "model,dataset,n_triples,tacc,auc,hmean";

/// Models × metrics, one row per report, header [`METRICS_CSV_HEADER`].
pub fn metrics_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from(METRICS_CSV_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{:.4},{:.4},{:.4}",
            csv_field(&r.model_id),
            csv_field(&r.dataset),
            r.n_triples,
            r.tacc,
            r.auc,
            r.hmean
        );
    }
    out
}

/// `model,dataset,PN,RS,US,AR,HS,AVG`; absent types are empty cells.
pub fn per_type_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("model,dataset");
    for kind in ManipulationType::ALL {
        let _ = write!(out, ",{kind}");
    }
    out.push_str(",AVG\n");
    for r in reports {
        let _ = write!(out, "{},{}", csv_field(&r.model_id), csv_field(&r.dataset));
        for kind in ManipulationType::ALL {
            match r.per_type_tacc.get(&kind) {
                Some(v) => {
                    let _ = write!(out, ",{v:.4}");
                }
                None => out.push(','),
            }
        }
        let _ = writeln!(out, ",{:.4}", r.per_type_avg);
    }
    out
}

/// Long-format grouped-bar data: `model,dataset,group,tacc` with groups
/// PN..HS and AVG.
pub fn plot_data_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("model,dataset,group,tacc\n");
    for r in reports {
        for (kind, v) in &r.per_type_tacc {
            let _ = writeln!(out, "{},{},{kind},{v:.4}", csv_field(&r.model_id), csv_field(&r.dataset));
        }
        let _ = writeln!(out, "{},{},AVG,{:.4}", csv_field(&r.model_id), csv_field(&r.dataset), r.per_type_avg);
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// A model ranking read from CSV. Values are stored so that lower is better.
#[derive(Clone, Debug, PartialEq)]
pub struct Ranking {
    pub entries: Vec<(String, f64)>,
}

/// Reads `model,<column>`: a header `rank` means lower is better; any other
/// header is a score where higher is better.
pub fn read_ranking_csv(path: &std::path::Path) -> Result<Ranking, BenchError> {
    let bad = |message: String| BenchError::Input { path: path.display().to_string(), message };
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.len() < 2 {
        return Err(bad("need a model column and a value column".into()));
    }
    let is_rank = headers[1].trim().eq_ignore_ascii_case("rank");
    let mut entries = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let value: f64 = row[1].trim().parse().map_err(|_| bad(format!("not a number: {:?}", &row[1])))?;
        entries.push((row[0].trim().to_string(), if is_rank { value } else { -value }));
    }
    Ok(Ranking { entries })
}

/// Spearman's ρ over the models present in both rankings, with the number of
/// models compared.
pub fn compare_rankings(a: &Ranking, b: &Ranking) -> Result<(f64, usize), BenchError> {
    let lookup: HashMap<&str, f64> = b.entries.iter().map(|(m, v)| (m.as_str(), *v)).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        a.entries.iter().filter_map(|(m, v)| lookup.get(m.as_str()).map(|w| (*v, *w))).unzip();
    Ok((spearman(&xs, &ys)?, xs.len()))
}
