//! Chat-completion transport contract, retry policy and rate limiting.

use std::fs;
use std::path::PathBuf;
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};

/// One completion request. `key` identifies the item being processed (the
/// article id, or `<id>.scope` for scope classification); it is used for
/// logging and fixture lookup and is never sent over the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_id: String,
    pub temperature: f64,
    pub message: String,
    #[serde(default)]
    pub key: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportError {
    /// Worth retrying: timeouts, 429, 5xx.
    Transient(String),
    /// Retrying will not help: bad credentials, 4xx, missing fixture.
    Fatal(String),
}

impl std::fmt::Display for TransportError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TransportError::Transient(m) => write!(f, "transient: {m}"),
            TransportError::Fatal(m) => write!(f, "fatal: {m}"),
        }
    }
}

pub trait ChatTransport: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> std::result::Result<String, TransportError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransportPolicy {
    pub model_id: String,
    pub temperature: f64,
    pub max_attempts: u32,
    /// Sleep before retry `i` is `backoff_ms[min(i, len - 1)]`.
    pub backoff_ms: Vec<u64>,
    /// Global request budget; `None` disables rate limiting.
    pub requests_per_minute: Option<f64>,
    /// Maximum in-flight requests.
    pub parallelism: usize,
}

impl Default for TransportPolicy {
    fn default() -> Self {
        TransportPolicy {
            model_id: "gpt-4o-mini".into(),
            temperature: 0.0,
            max_attempts: 3,
            backoff_ms: vec![500, 2_000, 8_000],
            requests_per_minute: None,
            parallelism: 4,
        }
    }
}

impl TransportPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.max_attempts < 1 {
            return Err(Error::Config("max_attempts must be at least 1".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(Error::Config(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.parallelism == 0 {
            return Err(Error::Config("parallelism must be at least 1".into()));
        }
        if let Some(rpm) = self.requests_per_minute {
            if rpm.is_nan() || rpm <= 0.0 {
                return Err(Error::Config("requests_per_minute must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn request(&self, key: &str, message: String) -> ChatRequest {
        ChatRequest {
            model_id: self.model_id.clone(),
            temperature: self.temperature,
            message,
            key: key.to_owned(),
        }
    }

    fn backoff(&self, retry: usize) -> Duration {
        match self.backoff_ms.as_slice() {
            [] => Duration::ZERO,
            b => Duration::from_millis(b[retry.min(b.len() - 1)]),
        }
    }
}

/// Spaces requests evenly to stay under a requests-per-minute budget.
/// Shared by all workers.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next_slot: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn new(requests_per_minute: Option<f64>) -> Self {
        let interval = requests_per_minute
            .map(|rpm| Duration::from_secs_f64(60.0 / rpm))
            .unwrap_or(Duration::ZERO);
        RateLimiter {
            interval,
            next_slot: Mutex::new(None),
        }
    }

    pub fn acquire(&self) {
        if self.interval.is_zero() {
            return;
        }
        let wait = {
            let mut slot = self.next_slot.lock().unwrap();
            let now = Instant::now();
            let start = slot.map_or(now, |s| s.max(now));
            *slot = Some(start + self.interval);
            start.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            thread::sleep(wait);
        }
    }
}

/// Outcome of a request after retries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub attempts: u32,
}

/// Sends `request`, retrying transient failures per `policy`.
pub fn send_with_retry(
    transport: &dyn ChatTransport,
    request: &ChatRequest,
    policy: &TransportPolicy,
    limiter: &RateLimiter,
) -> Result<Completion> {
    let mut last_error = String::new();
    for attempt in 1..=policy.max_attempts {
        limiter.acquire();
        match transport.complete(request) {
            Ok(text) => {
                log::debug!("{}: completed on attempt {attempt}", request.key);
                return Ok(Completion {
                    text,
                    attempts: attempt,
                });
            }
            Err(TransportError::Fatal(msg)) => {
                log::warn!("{}: attempt {attempt} failed permanently: {msg}", request.key);
                return Err(Error::TransportExhausted {
                    attempts: attempt,
                    last_error: msg,
                });
            }
            Err(TransportError::Transient(msg)) => {
                log::info!("{}: attempt {attempt} failed: {msg}", request.key);
                last_error = msg;
                if attempt < policy.max_attempts {
                    thread::sleep(policy.backoff(attempt as usize - 1));
                }
            }
        }
    }
    Err(Error::TransportExhausted {
        attempts: policy.max_attempts,
        last_error,
    })
}

/// Reads canned responses from `<dir>/<key>.txt`. A key of the form
/// `<id>.scope` maps to `<dir>/scope/<id>.txt`.
#[derive(Debug, Clone)]
pub struct FixtureTransport {
    dir: PathBuf,
}

impl FixtureTransport {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureTransport { dir: dir.into() }
    }

    fn path_for(&self, key: &str) -> PathBuf {
        match key.strip_suffix(".scope") {
            Some(id) => self.dir.join("scope").join(format!("{id}.txt")),
            None => self.dir.join("extract").join(format!("{key}.txt")),
        }
    }
}

impl ChatTransport for FixtureTransport {
    fn complete(&self, request: &ChatRequest) -> std::result::Result<String, TransportError> {
        let path = self.path_for(&request.key);
        fs::read_to_string(&path).map_err(|e| {
            let shown = path.strip_prefix(&self.dir).unwrap_or(&path);
            TransportError::Fatal(format!("fixture {}: {e}", shown.display()))
        })
    }
}

/// OpenAI-compatible `/chat/completions` client. The API key is read from
/// an environment variable at construction.
pub struct HttpTransport {
    endpoint: String,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn from_env(endpoint: &str, api_key_env: &str, timeout: Duration) -> Result<Self> {
        let api_key = std::env::var(api_key_env)
            .map_err(|_| Error::Config(format!("environment variable {api_key_env} not set")))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(HttpTransport {
            endpoint: endpoint.trim_end_matches('/').to_owned(),
            api_key,
            client,
        })
    }
}

impl ChatTransport for HttpTransport {
    fn complete(&self, request: &ChatRequest) -> std::result::Result<String, TransportError> {
        let body = json!({
            "model": request.model_id,
            "temperature": request.temperature,
            "messages": [{"role": "user", "content": request.message}],
        });
        let resp = self
            .client
            .post(format!("{}/chat/completions", self.endpoint))
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| TransportError::Transient(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(TransportError::Transient(format!("http {status}")));
        }
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err(TransportError::Fatal(format!("http {status}: {text}")));
        }
        let value: serde_json::Value = resp
            .json()
            .map_err(|e| TransportError::Transient(format!("bad body: {e}")))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| TransportError::Fatal("response without message content".into()))
    }
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::{AtomicU32, Ordering};

    use super::*;

    struct Flaky {
        failures: u32,
        calls: AtomicU32,
    }

    impl ChatTransport for Flaky {
        fn complete(&self, _: &ChatRequest) -> std::result::Result<String, TransportError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst) + 1;
            if n <= self.failures {
                Err(TransportError::Transient(format!("boom {n}")))
            } else {
                Ok("A: Yes".into())
            }
        }
    }

    fn policy() -> TransportPolicy {
        TransportPolicy {
            backoff_ms: vec![0],
            ..Default::default()
        }
    }

    #[test]
    fn retries_then_succeeds() {
        let t = Flaky {
            failures: 2,
            calls: AtomicU32::new(0),
        };
        let req = policy().request("a1", "hi".into());
        let done = send_with_retry(&t, &req, &policy(), &RateLimiter::new(None)).unwrap();
        assert_eq!(done.attempts, 3);
        assert_eq!(t.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn exhausts_after_max_attempts() {
        let t = Flaky {
            failures: u32::MAX,
            calls: AtomicU32::new(0),
        };
        let req = policy().request("a1", "hi".into());
        let err = send_with_retry(&t, &req, &policy(), &RateLimiter::new(None)).unwrap_err();
        assert!(matches!(err, Error::TransportExhausted { attempts: 3, .. }));
        assert_eq!(t.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn fatal_errors_are_not_retried() {
        let t = FixtureTransport::new("/nonexistent");
        let req = policy().request("missing", "hi".into());
        let err = send_with_retry(&t, &req, &policy(), &RateLimiter::new(None)).unwrap_err();
        assert!(matches!(err, Error::TransportExhausted { attempts: 1, .. }));
    }

    #[test]
    fn policy_validation() {
        assert!(TransportPolicy::default().validate().is_ok());
        assert_eq!(TransportPolicy::default().temperature, 0.0);
        let bad = TransportPolicy {
            max_attempts: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let hot = TransportPolicy {
            temperature: 2.5,
            ..Default::default()
        };
        assert!(hot.validate().is_err());
    }

    #[test]
    fn rate_limiter_spaces_requests() {
        let limiter = RateLimiter::new(Some(60_000.0)); // 1 ms interval
        let start = Instant::now();
        for _ in 0..5 {
            limiter.acquire();
        }
        assert!(start.elapsed() >= Duration::from_millis(4));
    }
}
