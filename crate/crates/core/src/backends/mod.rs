//! Clients for the neural capabilities: text-to-AMR parsing, AMR-to-text
//! generation, NLI and sentence embeddings.
//!
//! [`Backends`] validates everything a model returns; the [`Transport`]
//! beneath it decides where answers come from (HTTP, a replay fixture, an on
//! disk cache). Requests are keyed one item at a time so batching never
//! changes cache or fixture keys.

mod transport;

pub use transport::{CachedTransport, FixtureEntry, FixtureTransport, HttpTransport, RecordingTransport, Transport};

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::penman;

/// Environment variable naming the model server base URL.
pub const BACKEND_URL_ENV: &str = "AMRFOIL_BACKEND_URL";

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("{endpoint}: transport failure: {message}")]
    Transport { endpoint: Endpoint, message: String },
    #[error("{endpoint}: server answered {status}: {body}")]
    Status { endpoint: Endpoint, status: u16, body: String },
    #[error("{endpoint}: malformed response: {message}")]
    InvalidResponse { endpoint: Endpoint, message: String },
    #[error("parser returned an invalid graph: {0}")]
    InvalidGraph(String),
    #[error("generator returned an empty sentence")]
    EmptyGeneration,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("{endpoint}: no fixture for request {hash}")]
    FixtureMiss { endpoint: Endpoint, hash: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("backend configuration: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Parse,
    Generate,
    Nli,
    Embed,
}

impl Endpoint {
    pub fn path(self) -> &'static str {
        match self {
            Endpoint::Parse => "/parse",
            Endpoint::Generate => "/generate",
            Endpoint::Nli => "/nli",
            Endpoint::Embed => "/embed",
        }
    }

    /// Key of the list in the response body.
    pub fn response_key(self) -> &'static str {
        match self {
            Endpoint::Parse => "graphs",
            Endpoint::Generate => "sentences",
            Endpoint::Nli => "probs",
            Endpoint::Embed => "vectors",
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.path())
    }
}

/// One item of work for a model.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Request {
    Parse { sentence: String },
    Generate { graph: String },
    Nli { premise: String, hypothesis: String },
    Embed { text: String, model: String },
}

impl Request {
    pub fn endpoint(&self) -> Endpoint {
        match self {
            Request::Parse { .. } => Endpoint::Parse,
            Request::Generate { .. } => Endpoint::Generate,
            Request::Nli { .. } => Endpoint::Nli,
            Request::Embed { .. } => Endpoint::Embed,
        }
    }

    fn model(&self) -> Option<&str> {
        match self {
            Request::Embed { model, .. } => Some(model),
            _ => None,
        }
    }

    /// Wire body for a homogeneous batch (same endpoint, same model).
    pub fn batch_body(batch: &[Request]) -> Value {
        let endpoint = batch.first().map(Request::endpoint).unwrap_or(Endpoint::Parse);
        match endpoint {
            Endpoint::Parse => json!({ "sentences": batch.iter().map(|r| match r {
                Request::Parse { sentence } => sentence.as_str(),
                _ => unreachable!("mixed batch"),
            }).collect::<Vec<_>>() }),
            Endpoint::Generate => json!({ "graphs": batch.iter().map(|r| match r {
                Request::Generate { graph } => graph.as_str(),
                _ => unreachable!("mixed batch"),
            }).collect::<Vec<_>>() }),
            Endpoint::Nli => json!({ "pairs": batch.iter().map(|r| match r {
                Request::Nli { premise, hypothesis } => [premise.as_str(), hypothesis.as_str()],
                _ => unreachable!("mixed batch"),
            }).collect::<Vec<_>>() }),
            Endpoint::Embed => json!({
                "texts": batch.iter().map(|r| match r {
                    Request::Embed { text, .. } => text.as_str(),
                    _ => unreachable!("mixed batch"),
                }).collect::<Vec<_>>(),
                "model": batch.first().and_then(Request::model).unwrap_or_default(),
            }),
        }
    }

    /// Splits a wire body (as built by [`Request::batch_body`]) back into
    /// single-item requests.
    pub fn from_body(endpoint: Endpoint, body: &Value) -> Result<Vec<Request>, BackendError> {
        let bad = |message: &str| BackendError::Precondition(format!("{endpoint} request body: {message}"));
        let list = |key: &str| -> Result<&Vec<Value>, BackendError> {
            body.get(key).and_then(Value::as_array).ok_or_else(|| bad(&format!("missing `{key}` array")))
        };
        let text = |v: &Value| v.as_str().map(str::to_string).ok_or_else(|| bad("expected a string"));
        match endpoint {
            Endpoint::Parse => list("sentences")?.iter().map(|v| Ok(Request::Parse { sentence: text(v)? })).collect(),
            Endpoint::Generate => list("graphs")?.iter().map(|v| Ok(Request::Generate { graph: text(v)? })).collect(),
            Endpoint::Nli => list("pairs")?
                .iter()
                .map(|v| match v.as_array().map(Vec::as_slice) {
                    Some([p, h]) => Ok(Request::Nli { premise: text(p)?, hypothesis: text(h)? }),
                    _ => Err(bad("pairs must be [premise, hypothesis]")),
                })
                .collect(),
            Endpoint::Embed => {
                let model = body.get("model").and_then(Value::as_str).ok_or_else(|| bad("missing `model`"))?;
                list("texts")?
                    .iter()
                    .map(|v| Ok(Request::Embed { text: text(v)?, model: model.to_string() }))
                    .collect()
            }
        }
    }

    /// The request as a batch of one.
    pub fn body(&self) -> Value {
        Request::batch_body(std::slice::from_ref(self))
    }

    /// Stable key: SHA-256 over the endpoint path and the single-item body.
    pub fn hash(&self) -> String {
        request_hash(self.endpoint(), &self.body())
    }
}

/// SHA-256 (hex) over the endpoint path, a newline and the compact JSON body
/// of a single-item request. Object keys serialize sorted.
pub fn request_hash(endpoint: Endpoint, body: &Value) -> String {
    let mut hasher = Sha256::new();
    hasher.update(endpoint.path().as_bytes());
    hasher.update(b"\n");
    hasher.update(body.to_string().as_bytes());
    hex::encode(hasher.finalize())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NliLabel {
    Contradiction,
    Neutral,
    Entailment,
}

impl NliLabel {
    /// Column in the probability triple (contradiction, neutral, entailment).
    pub fn index(self) -> usize {
        match self {
            NliLabel::Contradiction => 0,
            NliLabel::Neutral => 1,
            NliLabel::Entailment => 2,
        }
    }

    /// -1, 0 or +1.
    pub fn check_value(self) -> i8 {
        self.index() as i8 - 1
    }
}

impl std::str::FromStr for NliLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "contradiction" => Ok(NliLabel::Contradiction),
            "neutral" => Ok(NliLabel::Neutral),
            "entailment" => Ok(NliLabel::Entailment),
            other => Err(format!("unknown NLI label `{other}`")),
        }
    }
}

const SIMPLEX_TOLERANCE: f64 = 1e-6;

/// Three-way NLI decision. Probabilities are ordered contradiction, neutral,
/// entailment; the label is always their argmax.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVerdict")]
pub struct NliVerdict {
    label: NliLabel,
    probs: [f64; 3],
}

#[derive(Deserialize)]
struct RawVerdict {
    label: Option<NliLabel>,
    probs: [f64; 3],
}

impl TryFrom<RawVerdict> for NliVerdict {
    type Error = String;

    fn try_from(raw: RawVerdict) -> Result<Self, Self::Error> {
        let verdict = NliVerdict::from_probs(raw.probs)?;
        match raw.label {
            Some(label) if label != verdict.label => Err(format!("label {label:?} is not the argmax of {:?}", raw.probs)),
            _ => Ok(verdict),
        }
    }
}

impl NliVerdict {
    pub fn from_probs(probs: [f64; 3]) -> Result<Self, String> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(format!("probabilities must be finite and non-negative: {probs:?}"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(format!("probabilities sum to {sum}, not 1"));
        }
        let mut best = 0;
        for i in 1..3 {
            if probs[i] > probs[best] {
                best = i;
            }
        }
        let label = [NliLabel::Contradiction, NliLabel::Neutral, NliLabel::Entailment][best];
        Ok(NliVerdict { label, probs })
    }

    pub fn label(&self) -> NliLabel {
        self.label
    }

    pub fn probs(&self) -> [f64; 3] {
        self.probs
    }

    pub fn prob(&self, label: NliLabel) -> f64 {
        self.probs[label.index()]
    }

    /// Mean of two verdicts, renormalized.
    pub fn average(&self, other: &NliVerdict) -> NliVerdict {
        let mut probs = [0.0; 3];
        for (i, p) in probs.iter_mut().enumerate() {
            *p = (self.probs[i] + other.probs[i]) / 2.0;
        }
        let sum: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= sum);
        NliVerdict::from_probs(probs).expect("average of two simplex points")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub values: Vec<f32>,
    pub model_id: String,
}

/// Connection settings; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackendConfig {
    /// `http` or `fixture`.
    pub mode: BackendMode,
    pub base_url: Option<String>,
    pub fixtures: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub timeout_secs: u64,
    pub retries: u32,
    pub batch_size: usize,
    pub max_in_flight: usize,
    /// Average the NLI verdict of both directions.
    pub nli_symmetric: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendMode {
    #[default]
    Http,
    Fixture,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            mode: BackendMode::Http,
            base_url: None,
            fixtures: None,
            cache_dir: None,
            timeout_secs: 60,
            retries: 2,
            batch_size: 32,
            max_in_flight: 8,
            nli_symmetric: false,
        }
    }
}

impl BackendConfig {
    /// Base URL from the config, else from [`BACKEND_URL_ENV`].
    pub fn resolved_base_url(&self) -> Option<String> {
        self.base_url.clone().or_else(|| std::env::var(BACKEND_URL_ENV).ok())
    }

    pub fn http_transport(&self) -> Result<HttpTransport, BackendError> {
        let url = self
            .resolved_base_url()
            .ok_or_else(|| BackendError::Config(format!("no base_url configured and {BACKEND_URL_ENV} unset")))?;
        HttpTransport::new(&url, Duration::from_secs(self.timeout_secs), self.retries, self.max_in_flight)
    }

    /// The configured transport stack: HTTP or fixture replay, behind the
    /// disk cache when `cache_dir` is set.
    pub fn transport(&self) -> Result<Arc<dyn Transport>, BackendError> {
        let base: Arc<dyn Transport> = match self.mode {
            BackendMode::Fixture => {
                let path = self
                    .fixtures
                    .as_ref()
                    .ok_or_else(|| BackendError::Config("fixture mode needs `fixtures`".into()))?;
                Arc::new(FixtureTransport::load(path)?)
            }
            BackendMode::Http => Arc::new(self.http_transport()?),
        };
        Ok(match &self.cache_dir {
            Some(dir) => Arc::new(CachedTransport::new(base, dir)?),
            None => base,
        })
    }

    /// [`Backends`] over [`BackendConfig::transport`].
    pub fn connect(&self) -> Result<Backends, BackendError> {
        Ok(self.backends_over(self.transport()?))
    }

    /// [`Backends`] with this configuration's batching and NLI settings.
    pub fn backends_over(&self, transport: Arc<dyn Transport>) -> Backends {
        Backends::new(transport).with_batch_size(self.batch_size).with_nli_symmetric(self.nli_symmetric)
    }
}

/// Validating facade over a [`Transport`].
#[derive(Clone)]
pub struct Backends {
    transport: Arc<dyn Transport>,
    batch_size: usize,
    nli_symmetric: bool,
}

impl fmt::Debug for Backends {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Backends")
            .field("batch_size", &self.batch_size)
            .field("nli_symmetric", &self.nli_symmetric)
            .finish_non_exhaustive()
    }
}

impl Backends {
    pub fn new(transport: Arc<dyn Transport>) -> Self {
        Backends { transport, batch_size: 32, nli_symmetric: false }
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    pub fn with_nli_symmetric(mut self, symmetric: bool) -> Self {
        self.nli_symmetric = symmetric;
        self
    }

    fn send(&self, requests: &[Request]) -> Result<Vec<Value>, BackendError> {
        let mut out = Vec::with_capacity(requests.len());
        for chunk in requests.chunks(self.batch_size) {
            let answers = self.transport.send(chunk)?;
            if answers.len() != chunk.len() {
                return Err(BackendError::InvalidResponse {
                    endpoint: chunk[0].endpoint(),
                    message: format!("expected {} results, got {}", chunk.len(), answers.len()),
                });
            }
            out.extend(answers);
        }
        Ok(out)
    }

    fn send_one(&self, request: Request) -> Result<Value, BackendError> {
        Ok(self.send(std::slice::from_ref(&request))?.remove(0))
    }

    /// Parses a sentence into PENMAN text, checked with the PENMAN reader.
    /// An invalid graph is requested once more before giving up.
    pub fn parse_text(&self, sentence: &str) -> Result<String, BackendError> {
        if sentence.trim().is_empty() {
            return Err(BackendError::Precondition("cannot parse an empty sentence".into()));
        }
        let request = Request::Parse { sentence: sentence.to_string() };
        let mut last_error = String::new();
        for attempt in 0..2 {
            if attempt > 0 {
                self.transport.invalidate(&request);
            }
            let value = self.send_one(request.clone())?;
            let text = as_string(Endpoint::Parse, value)?;
            match penman::parse(&text) {
                Ok(_) => return Ok(text),
                Err(e) => last_error = e.to_string(),
            }
        }
        Err(BackendError::InvalidGraph(last_error))
    }

    pub fn generate_text(&self, graph: &str) -> Result<String, BackendError> {
        penman::parse(graph).map_err(|e| BackendError::Precondition(format!("invalid PENMAN input: {e}")))?;
        let value = self.send_one(Request::Generate { graph: graph.to_string() })?;
        let text = as_string(Endpoint::Generate, value)?;
        if text.trim().is_empty() {
            return Err(BackendError::EmptyGeneration);
        }
        Ok(text)
    }

    /// NLI verdict for premise → hypothesis (or the averaged two-way verdict
    /// when configured symmetric).
    pub fn nli_check(&self, premise: &str, hypothesis: &str) -> Result<NliVerdict, BackendError> {
        if premise.trim().is_empty() || hypothesis.trim().is_empty() {
            return Err(BackendError::Precondition("NLI needs two non-empty texts".into()));
        }
        let mut requests = vec![Request::Nli { premise: premise.to_string(), hypothesis: hypothesis.to_string() }];
        if self.nli_symmetric {
            requests.push(Request::Nli { premise: hypothesis.to_string(), hypothesis: premise.to_string() });
        }
        let verdicts = self
            .send(&requests)?
            .into_iter()
            .map(as_verdict)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(match verdicts.as_slice() {
            [one] => *one,
            [a, b] => a.average(b),
            _ => unreachable!(),
        })
    }

    /// Embeds a batch; all vectors must share one non-zero length.
    pub fn embed(&self, texts: &[String], model_id: &str) -> Result<Vec<Embedding>, BackendError> {
        if texts.is_empty() {
            return Err(BackendError::Precondition("empty embedding batch".into()));
        }
        let requests: Vec<Request> = texts
            .iter()
            .map(|t| Request::Embed { text: t.clone(), model: model_id.to_string() })
            .collect();
        let vectors = self
            .send(&requests)?
            .into_iter()
            .map(|v| {
                serde_json::from_value::<Vec<f32>>(v).map_err(|e| BackendError::InvalidResponse {
                    endpoint: Endpoint::Embed,
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let dim = vectors[0].len();
        if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
            return Err(BackendError::InvalidResponse {
                endpoint: Endpoint::Embed,
                message: "vectors must be non-empty and of equal length".into(),
            });
        }
        Ok(vectors.into_iter().map(|values| Embedding { values, model_id: model_id.to_string() }).collect())
    }
}

fn as_string(endpoint: Endpoint, value: Value) -> Result<String, BackendError> {
    match value {
        Value::String(s) => Ok(s),
        other => Err(BackendError::InvalidResponse { endpoint, message: format!("expected a string, got {other}") }),
    }
}

fn as_verdict(value: Value) -> Result<NliVerdict, BackendError> {
    let probs: [f64; 3] = serde_json::from_value(value)
        .map_err(|e| BackendError::InvalidResponse { endpoint: Endpoint::Nli, message: e.to_string() })?;
    NliVerdict::from_probs(probs).map_err(|message| BackendError::InvalidResponse { endpoint: Endpoint::Nli, message })
}
