use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{BackendError, Endpoint, Request};

/// Moves a homogeneous batch of requests to a model and back. Implementations
/// return exactly one JSON item per request, in order.
pub trait Transport: Send + Sync {
    fn send(&self, batch: &[Request]) -> Result<Vec<Value>, BackendError>;

    /// Forget any stored answer for `request` so the next send asks again.
    fn invalidate(&self, _request: &Request) {}
}

impl<T: Transport + ?Sized> Transport for Arc<T> {
    fn send(&self, batch: &[Request]) -> Result<Vec<Value>, BackendError> {
        (**self).send(batch)
    }

    fn invalidate(&self, request: &Request) {
        (**self).invalidate(request)
    }
}

struct Semaphore {
    permits: Mutex<usize>,
    freed: Condvar,
}

impl Semaphore {
    fn new(permits: usize) -> Self {
        Semaphore { permits: Mutex::new(permits.max(1)), freed: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut permits = self.permits.lock().unwrap_or_else(|e| e.into_inner());
        while *permits == 0 {
            permits = self.freed.wait(permits).unwrap_or_else(|e| e.into_inner());
        }
        *permits -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Semaphore);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.permits.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.freed.notify_one();
    }
}

/// JSON over HTTP against the model server.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    base_url: String,
    retries: u32,
    in_flight: Semaphore,
}

impl HttpTransport {
    pub fn new(base_url: &str, timeout: Duration, retries: u32, max_in_flight: usize) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(HttpTransport {
            client,
            base_url: base_url.trim_end_matches('/').to_string(),
            retries,
            in_flight: Semaphore::new(max_in_flight),
        })
    }

    fn post(&self, endpoint: Endpoint, body: &Value) -> Result<Value, BackendError> {
        let url = format!("{}{}", self.base_url, endpoint.path());
        let mut attempt = 0;
        loop {
            let outcome = {
                let _permit = self.in_flight.acquire();
                self.client.post(&url).json(body).send()
            };
            let retryable = match outcome {
                Ok(response) => {
                    let status = response.status();
                    if status.is_success() {
                        return response.json::<Value>().map_err(|e| BackendError::InvalidResponse {
                            endpoint,
                            message: e.to_string(),
                        });
                    }
                    let error = BackendError::Status {
                        endpoint,
                        status: status.as_u16(),
                        body: response.text().unwrap_or_default(),
                    };
                    if !status.is_server_error() {
                        return Err(error);
                    }
                    error
                }
                Err(e) => BackendError::Transport { endpoint, message: e.to_string() },
            };
            if attempt >= self.retries {
                return Err(retryable);
            }
            attempt += 1;
            tracing::warn!(%endpoint, attempt, error = %retryable, "retrying request");
            std::thread::sleep(Duration::from_millis(100 << attempt.min(6)));
        }
    }
}

impl Transport for HttpTransport {
    fn send(&self, batch: &[Request]) -> Result<Vec<Value>, BackendError> {
        let Some(first) = batch.first() else {
            return Ok(Vec::new());
        };
        let endpoint = first.endpoint();
        let body = Request::batch_body(batch);
        let mut response = self.post(endpoint, &body)?;
        let items = match response.get_mut(endpoint.response_key()).map(Value::take) {
            Some(Value::Array(items)) => items,
            _ => {
                return Err(BackendError::InvalidResponse {
                    endpoint,
                    message: format!("missing `{}` array", endpoint.response_key()),
                })
            }
        };
        if items.len() != batch.len() {
            return Err(BackendError::InvalidResponse {
                endpoint,
                message: format!("expected {} results, got {}", batch.len(), items.len()),
            });
        }
        Ok(items)
    }
}

/// One line of a fixture file. Hand-written lines may omit `request_hash`
/// when `endpoint` and `request` are given; it is then computed on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    #[serde(default)]
    pub request_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<Endpoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request: Option<Value>,
    pub response: Value,
}

impl FixtureEntry {
    pub fn new(request: &Request, response: Value) -> Self {
        FixtureEntry {
            request_hash: request.hash(),
            endpoint: Some(request.endpoint()),
            request: Some(request.body()),
            response,
        }
    }
}

/// Offline replay of recorded responses.
#[derive(Debug, Default)]
pub struct FixtureTransport {
    responses: HashMap<String, Value>,
}

impl FixtureTransport {
    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let io = |source| BackendError::Io { path: path.to_path_buf(), source };
        let file = fs::File::open(path).map_err(io)?;
        let mut responses = HashMap::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| BackendError::Config(format!("{}:{}: {message}", path.display(), n + 1));
            let mut entry: FixtureEntry = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
            if let (Some(endpoint), Some(request)) = (entry.endpoint, &entry.request) {
                let computed = super::request_hash(endpoint, request);
                if entry.request_hash.is_empty() {
                    entry.request_hash = computed;
                } else if entry.request_hash != computed {
                    return Err(bad(format!("request_hash does not match the request ({computed})")));
                }
            }
            if entry.request_hash.is_empty() {
                return Err(bad("entry needs request_hash, or endpoint and request".into()));
            }
            responses.insert(entry.request_hash, entry.response);
        }
        Ok(FixtureTransport { responses })
    }

    pub fn from_entries(entries: impl IntoIterator<Item = FixtureEntry>) -> Self {
        FixtureTransport { responses: entries.into_iter().map(|e| (e.request_hash, e.response)).collect() }
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl Transport for FixtureTransport {
    fn send(&self, batch: &[Request]) -> Result<Vec<Value>, BackendError> {
        batch
            .iter()
            .map(|request| {
                let hash = request.hash();
                self.responses
                    .get(&hash)
                    .cloned()
                    .ok_or(BackendError::FixtureMiss { endpoint: request.endpoint(), hash })
            })
            .collect()
    }
}

/// Passes requests through and appends every answer to a fixture file.
pub struct RecordingTransport<T> {
    inner: T,
    path: PathBuf,
    seen: Mutex<std::collections::HashSet<String>>,
}

impl<T: Transport> RecordingTransport<T> {
    /// Appends to `path`; entries already present are not written twice.
    pub fn new(inner: T, path: &Path) -> Result<Self, BackendError> {
        let seen = match FixtureTransport::load(path) {
            Ok(existing) => existing.responses.into_keys().collect(),
            Err(BackendError::Io { source, .. }) if source.kind() == std::io::ErrorKind::NotFound => Default::default(),
            Err(e) => return Err(e),
        };
        Ok(RecordingTransport { inner, path: path.to_path_buf(), seen: Mutex::new(seen) })
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn send(&self, batch: &[Request]) -> Result<Vec<Value>, BackendError> {
        let answers = self.inner.send(batch)?;
        let mut seen = self.seen.lock().unwrap_or_else(|e| e.into_inner());
        let io = |source| BackendError::Io { path: self.path.clone(), source };
        let mut file = fs::OpenOptions::new().create(true).append(true).open(&self.path).map_err(io)?;
        for (request, answer) in batch.iter().zip(&answers) {
            let entry = FixtureEntry::new(request, answer.clone());
            if seen.insert(entry.request_hash.clone()) {
                let line = serde_json::to_string(&entry).expect("fixture entries serialize");
                writeln!(file, "{line}").map_err(io)?;
            }
        }
        Ok(answers)
    }

    fn invalidate(&self, request: &Request) {
        self.inner.invalidate(request)
    }
}

/// On-disk response cache, one file per (endpoint, request hash). Writes go
/// through a temporary file and a rename, so concurrent writers are safe.
pub struct CachedTransport<T> {
    inner: T,
    dir: PathBuf,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl<T: Transport> CachedTransport<T> {
    pub fn new(inner: T, dir: &Path) -> Result<Self, BackendError> {
        fs::create_dir_all(dir).map_err(|source| BackendError::Io { path: dir.to_path_buf(), source })?;
        Ok(CachedTransport { inner, dir: dir.to_path_buf() })
    }

    fn entry_path(&self, request: &Request) -> PathBuf {
        let endpoint = request.endpoint().path().trim_start_matches('/');
        self.dir.join(endpoint).join(format!("{}.json", request.hash()))
    }

    fn lookup(&self, request: &Request) -> Option<Value> {
        let text = fs::read_to_string(self.entry_path(request)).ok()?;
        serde_json::from_str(&text).ok()
    }

    fn store(&self, request: &Request, value: &Value) -> Result<(), BackendError> {
        let path = self.entry_path(request);
        let parent = path.parent().expect("cache entries live in a directory");
        let io = |source| BackendError::Io { path: path.clone(), source };
        fs::create_dir_all(parent).map_err(io)?;
        let tmp = parent.join(format!(
            ".{}.{}.{}.tmp",
            request.hash(),
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        fs::write(&tmp, value.to_string()).map_err(io)?;
        fs::rename(&tmp, &path).map_err(io)
    }
}

impl<T: Transport> Transport for CachedTransport<T> {
    fn send(&self, batch: &[Request]) -> Result<Vec<Value>, BackendError> {
        let mut answers: Vec<Option<Value>> = batch.iter().map(|r| self.lookup(r)).collect();
        let missing: Vec<usize> = (0..batch.len()).filter(|&i| answers[i].is_none()).collect();
        if !missing.is_empty() {
            let requests: Vec<Request> = missing.iter().map(|&i| batch[i].clone()).collect();
            let fetched = self.inner.send(&requests)?;
            for (&i, value) in missing.iter().zip(fetched) {
                self.store(&batch[i], &value)?;
                answers[i] = Some(value);
            }
        }
        Ok(answers.into_iter().map(|a| a.expect("filled above")).collect())
    }

    fn invalidate(&self, request: &Request) {
        let _ = fs::remove_file(self.entry_path(request));
        self.inner.invalidate(request);
    }
}
