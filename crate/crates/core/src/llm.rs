//! Frozen decoder backends.
//!
//! Two backends exist: a deterministic mock used for offline runs and tests,
//! and a generic chat-completion HTTP endpoint. HTTP calls go through the
//! [`Transport`] trait so tests can substitute an instrumented fake.

use std::io::Write;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::prompt::RenderedPrompt;

const KEYWORD_HEADER: &str = "[Denoised Brain-Signal Keywords]";
const MAX_BACKOFF: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub kind: BackendKind,
    pub endpoint: Option<String>,
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout: Duration,
    pub max_in_flight: usize,
    pub retry_limit: u32,
    /// First retry delay; doubles on every further attempt.
    pub backoff_base: Duration,
    /// Environment variable holding a bearer token, if any.
    pub api_key_env: Option<String>,
}

impl BackendDescriptor {
    pub fn mock() -> Self {
        Self {
            kind: BackendKind::Mock,
            endpoint: None,
            model_name: "mock".into(),
            temperature: 0.0,
            max_tokens: 64,
            timeout: Duration::from_secs(60),
            max_in_flight: 4,
            retry_limit: 0,
            backoff_base: Duration::from_millis(500),
            api_key_env: None,
        }
    }

    pub fn http(endpoint: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            kind: BackendKind::Http,
            endpoint: Some(endpoint.into()),
            model_name: model_name.into(),
            retry_limit: 3,
            ..Self::mock()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == BackendKind::Http {
            match &self.endpoint {
                Some(e) if !e.trim().is_empty() => {}
                _ => return Err(Error::Backend("http backend requires an endpoint".into())),
            }
            if self.model_name.trim().is_empty() {
                return Err(Error::Backend("http backend requires a model name".into()));
            }
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(Error::Backend(format!(
                "temperature {} < 0",
                self.temperature
            )));
        }
        if self.max_in_flight == 0 {
            return Err(Error::Backend("max_in_flight must be at least 1".into()));
        }
        Ok(())
    }

    fn label(&self) -> String {
        match self.kind {
            BackendKind::Mock => "mock".into(),
            BackendKind::Http => format!("http:{}", self.model_name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationResult {
    pub caption: String,
    pub raw: String,
    pub backend: String,
    pub latency: Duration,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Network-level failure: the request never produced a status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportFailure(pub String);

pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        headers: &[(String, String)],
        body: &Value,
        timeout: Duration,
    ) -> std::result::Result<HttpResponse, TransportFailure>;
}

/// Blocking reqwest transport.
pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new() -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| Error::Backend(e.to_string()))?;
        Ok(Self { client })
    }
}

impl Transport for ReqwestTransport {
    fn post_json(
        &self,
        url: &str,
        headers: &[(String, String)],
        body: &Value,
        timeout: Duration,
    ) -> std::result::Result<HttpResponse, TransportFailure> {
        let mut req = self.client.post(url).timeout(timeout).json(body);
        for (k, v) in headers {
            req = req.header(k, v);
        }
        let resp = req.send().map_err(|e| TransportFailure(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| TransportFailure(e.to_string()))?;
        Ok(HttpResponse { status, body })
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct InFlightGate {
    limit: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a InFlightGate);

impl InFlightGate {
    fn new(limit: usize) -> Self {
        Self {
            limit,
            active: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut active = self.active.lock().unwrap_or_else(|p| p.into_inner());
        while *active >= self.limit {
            active = self.freed.wait(active).unwrap_or_else(|p| p.into_inner());
        }
        *active += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut active = self.0.active.lock().unwrap_or_else(|p| p.into_inner());
        *active -= 1;
        self.0.freed.notify_one();
    }
}

fn is_transient(status: u16) -> bool {
    matches!(status, 408 | 429 | 500..=599)
}

/// Shareable decoder client. Clone-free: wrap in `Arc` to share.
pub struct LlmClient {
    descriptor: BackendDescriptor,
    transport: Option<Arc<dyn Transport>>,
    gate: InFlightGate,
    log: Option<Mutex<Box<dyn Write + Send>>>,
}

impl LlmClient {
    pub fn new(descriptor: BackendDescriptor) -> Result<Self> {
        let transport: Option<Arc<dyn Transport>> = match descriptor.kind {
            BackendKind::Mock => None,
            BackendKind::Http => Some(Arc::new(ReqwestTransport::new()?)),
        };
        Self::build(descriptor, transport)
    }

    pub fn with_transport(
        descriptor: BackendDescriptor,
        transport: Arc<dyn Transport>,
    ) -> Result<Self> {
        Self::build(descriptor, Some(transport))
    }

    fn build(descriptor: BackendDescriptor, transport: Option<Arc<dyn Transport>>) -> Result<Self> {
        descriptor.validate()?;
        Ok(Self {
            gate: InFlightGate::new(descriptor.max_in_flight),
            descriptor,
            transport,
            log: None,
        })
    }

    /// Appends one JSON line per HTTP attempt to `sink`.
    pub fn with_log(mut self, sink: Box<dyn Write + Send>) -> Self {
        self.log = Some(Mutex::new(sink));
        self
    }

    pub fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    pub fn generate(&self, prompt: &RenderedPrompt) -> Result<GenerationResult> {
        let start = Instant::now();
        let (raw, attempts) = match self.descriptor.kind {
            BackendKind::Mock => {
                let _permit = self.gate.acquire();
                (mock_generate(&prompt.text), 1)
            }
            BackendKind::Http => self.generate_http(&prompt.text, start)?,
        };
        let caption = postprocess(&raw)?;
        Ok(GenerationResult {
            caption,
            raw,
            backend: self.descriptor.label(),
            latency: start.elapsed(),
            attempts,
        })
    }

    fn generate_http(&self, prompt: &str, start: Instant) -> Result<(String, u32)> {
        let d = &self.descriptor;
        let transport = self
            .transport
            .as_ref()
            .ok_or_else(|| Error::Backend("http backend has no transport".into()))?;
        let url = d.endpoint.as_deref().unwrap_or_default();
        let body = json!({
            "model": d.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": d.temperature,
            "max_tokens": d.max_tokens,
        });
        let mut headers = vec![("Content-Type".to_owned(), "application/json".to_owned())];
        if let Some(key) = d.api_key_env.as_deref().and_then(|v| std::env::var(v).ok()) {
            headers.push(("Authorization".to_owned(), format!("Bearer {key}")));
        }

        let max_attempts = d.retry_limit + 1;
        let mut last_status = None;
        let mut last_error = String::new();
        for attempt in 1..=max_attempts {
            if attempt > 1 {
                let factor = 1u32.checked_shl(attempt - 2).unwrap_or(u32::MAX);
                std::thread::sleep(d.backoff_base.saturating_mul(factor).min(MAX_BACKOFF));
            }
            let sent = Instant::now();
            let outcome = {
                let _permit = self.gate.acquire();
                transport.post_json(url, &headers, &body, d.timeout)
            };
            self.log_attempt(attempt, &outcome, sent.elapsed());
            match outcome {
                Ok(resp) if (200..300).contains(&resp.status) => {
                    let text = extract_content(&resp.body).ok_or_else(|| Error::Transport {
                        attempts: attempt,
                        status: Some(resp.status),
                        last: "response has no choices[0].message.content".into(),
                        elapsed: start.elapsed(),
                    })?;
                    return Ok((text, attempt));
                }
                Ok(resp) => {
                    last_status = Some(resp.status);
                    last_error = format!("status {}", resp.status);
                    if !is_transient(resp.status) {
                        return Err(Error::Transport {
                            attempts: attempt,
                            status: last_status,
                            last: last_error,
                            elapsed: start.elapsed(),
                        });
                    }
                }
                Err(TransportFailure(msg)) => last_error = msg,
            }
        }
        Err(Error::Transport {
            attempts: max_attempts,
            status: last_status,
            last: last_error,
            elapsed: start.elapsed(),
        })
    }

    fn log_attempt(
        &self,
        attempt: u32,
        outcome: &std::result::Result<HttpResponse, TransportFailure>,
        elapsed: Duration,
    ) {
        let Some(log) = &self.log else { return };
        let entry = match outcome {
            Ok(r) => json!({
                "model": self.descriptor.model_name,
                "attempt": attempt,
                "status": r.status,
                "elapsed_ms": elapsed.as_millis() as u64,
                "response": r.body,
            }),
            Err(TransportFailure(e)) => json!({
                "model": self.descriptor.model_name,
                "attempt": attempt,
                "error": e,
                "elapsed_ms": elapsed.as_millis() as u64,
            }),
        };
        let mut sink = log.lock().unwrap_or_else(|p| p.into_inner());
        // Logging must never fail a generation.
        let _ = writeln!(sink, "{entry}");
    }
}

/// One-shot convenience wrapper around [`LlmClient`].
pub fn generate(prompt: &RenderedPrompt, backend: &BackendDescriptor) -> Result<GenerationResult> {
    LlmClient::new(backend.clone())?.generate(prompt)
}

fn extract_content(body: &str) -> Option<String> {
    let v: Value = serde_json::from_str(body).ok()?;
    v.pointer("/choices/0/message/content")?
        .as_str()
        .map(str::to_owned)
}

/// Keywords listed under the keyword header of a rendered prompt.
pub fn keyword_block(prompt: &str) -> Vec<String> {
    let mut lines = prompt.lines();
    if lines
        .by_ref()
        .find(|l| l.trim() == KEYWORD_HEADER)
        .is_none()
    {
        return Vec::new();
    }
    let Some(list) = lines.next() else {
        return Vec::new();
    };
    let inner = list
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .unwrap_or("");
    inner
        .split(',')
        .map(str::trim)
        .filter(|w| !w.is_empty())
        .map(str::to_owned)
        .collect()
}

/// "a photo of <w1> and <w2>", or "a photo of <w1>" for a single keyword,
/// or an empty string when the prompt lists none.
pub fn mock_generate(prompt: &str) -> String {
    match keyword_block(prompt).as_slice() {
        [] => String::new(),
        [one] => format!("a photo of {one}"),
        [first, second, ..] => format!("a photo of {first} and {second}"),
    }
}

fn strip_label(s: &str) -> &str {
    const LABEL: &str = "output:";
    match s.get(..LABEL.len()) {
        Some(head) if head.eq_ignore_ascii_case(LABEL) => &s[LABEL.len()..],
        _ => s,
    }
}

fn strip_quotes(s: &str) -> &str {
    for (open, close) in [
        ('"', '"'),
        ('\'', '\''),
        ('\u{201c}', '\u{201d}'),
        ('`', '`'),
    ] {
        if s.chars().count() >= 2 && s.starts_with(open) && s.ends_with(close) {
            return &s[open.len_utf8()..s.len() - close.len_utf8()];
        }
    }
    s
}

/// Reduces a raw generation to a single-line caption.
pub fn postprocess(raw: &str) -> Result<String> {
    let joined = raw
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    let mut current = joined.as_str();
    loop {
        let next = strip_quotes(strip_label(current.trim()).trim()).trim();
        if next == current {
            break;
        }
        current = next;
    }
    if current.is_empty() {
        return Err(Error::EmptyOutput);
    }
    Ok(current.to_owned())
}
