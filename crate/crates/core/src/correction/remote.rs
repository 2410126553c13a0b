//! Client for a hosted corrector reached over HTTP.
//!
//! Request: `POST <endpoint>` with JSON `{"input": <text>, "prompt": <rendered
//! template>}` and, when configured, `Authorization: Bearer <token>` where
//! the token is read from a named environment variable. Response: a JSON
//! array of exactly three strings.

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::{CorrectionResult, CorrectionSource};
use crate::error::{Error, Result};

/// Replaced by the input text when rendering the prompt.
pub const PROMPT_PLACEHOLDER: &str = "{input}";

pub const DEFAULT_PROMPT: &str = "Correct this sign language transcription. Reply with a JSON \
array of exactly three grammatically correct variants, best first: {input}";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemoteCorrectorConfig {
    pub endpoint: String,
    /// Name of the environment variable holding the bearer token.
    pub token_env: Option<String>,
    /// Per-attempt timeout; a whole call never exceeds
    /// `(max_retries + 1) * timeout_ms`.
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub prompt_template: String,
    /// First retry delay; doubles on each further retry.
    pub backoff_ms: u64,
    /// Concurrent requests allowed through one [`RemoteCorrector`].
    pub max_in_flight: usize,
}

impl Default for RemoteCorrectorConfig {
    fn default() -> Self {
        RemoteCorrectorConfig {
            endpoint: "http://127.0.0.1:8080/correct".into(),
            token_env: None,
            timeout_ms: 10_000,
            max_retries: 2,
            prompt_template: DEFAULT_PROMPT.into(),
            backoff_ms: 200,
            max_in_flight: 4,
        }
    }
}

impl RemoteCorrectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.endpoint.starts_with("http://") || self.endpoint.starts_with("https://")) {
            return Err(Error::InvalidArgument(format!(
                "endpoint {:?} must be an http(s) URL",
                self.endpoint
            )));
        }
        if self.timeout_ms == 0 {
            return Err(Error::InvalidArgument("timeout must be > 0".into()));
        }
        if self.prompt_template.matches(PROMPT_PLACEHOLDER).count() != 1 {
            return Err(Error::InvalidArgument(format!(
                "prompt template needs exactly one {PROMPT_PLACEHOLDER}"
            )));
        }
        if self.max_in_flight == 0 {
            return Err(Error::InvalidArgument("max_in_flight must be >= 1".into()));
        }
        Ok(())
    }

    pub fn render_prompt(&self, text: &str) -> String {
        self.prompt_template.replace(PROMPT_PLACEHOLDER, text)
    }
}

#[derive(Serialize)]
struct RequestBody<'a> {
    input: &'a str,
    prompt: String,
}

/// Uppercase, keep letters and single spaces.
fn clean_candidate(s: &str) -> String {
    s.to_uppercase()
        .chars()
        .map(|c| if c.is_ascii_uppercase() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parse a response body into three candidates.
pub fn parse_candidates(body: &str) -> Result<CorrectionResult> {
    let raw: Vec<String> = serde_json::from_str(body)
        .map_err(|e| Error::Protocol(format!("response is not a JSON array of strings: {e}")))?;
    if raw.len() != 3 {
        return Err(Error::Protocol(format!("expected 3 candidates, got {}", raw.len())));
    }
    let cleaned: Vec<String> = raw.iter().map(|s| clean_candidate(s)).collect();
    if let Some(i) = cleaned.iter().position(String::is_empty) {
        return Err(Error::Protocol(format!("candidate {} has no letters: {:?}", i + 1, raw[i])));
    }
    CorrectionResult::new(cleaned, CorrectionSource::Remote)
}

enum Attempt {
    Done(Result<CorrectionResult>),
    Transient(String),
}

/// Remote corrector with a cap on concurrent requests.
pub struct RemoteCorrector {
    config: RemoteCorrectorConfig,
    in_flight: Mutex<usize>,
    slot_free: Condvar,
}

struct Slot<'a>(&'a RemoteCorrector);

impl Drop for Slot<'_> {
    fn drop(&mut self) {
        *self.0.in_flight.lock().unwrap_or_else(|e| e.into_inner()) -= 1;
        self.0.slot_free.notify_one();
    }
}

impl RemoteCorrector {
    pub fn new(config: RemoteCorrectorConfig) -> Result<Self> {
        config.validate()?;
        Ok(RemoteCorrector {
            config,
            in_flight: Mutex::new(0),
            slot_free: Condvar::new(),
        })
    }

    pub fn config(&self) -> &RemoteCorrectorConfig {
        &self.config
    }

    fn acquire(&self) -> Slot<'_> {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.config.max_in_flight {
            n = self.slot_free.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        Slot(self)
    }

    fn token(&self) -> Result<Option<String>> {
        match &self.config.token_env {
            None => Ok(None),
            Some(name) => std::env::var(name)
                .map(Some)
                .map_err(|_| Error::InvalidArgument(format!("environment variable {name} is not set"))),
        }
    }

    fn attempt(&self, body: &RequestBody, token: Option<&str>, timeout: Duration) -> Attempt {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut req = agent.post(&self.config.endpoint);
        if let Some(t) = token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        let mut resp = match req.send_json(body) {
            Ok(r) => r,
            Err(e) => return Attempt::Transient(e.to_string()),
        };
        let status = resp.status().as_u16();
        if status == 429 || (500..600).contains(&status) {
            return Attempt::Transient(format!("HTTP status {status}"));
        }
        if !(200..300).contains(&status) {
            return Attempt::Done(Err(Error::Protocol(format!("HTTP status {status}"))));
        }
        match resp.body_mut().read_to_string() {
            Ok(text) => Attempt::Done(parse_candidates(&text)),
            Err(e) => Attempt::Transient(format!("reading response: {e}")),
        }
    }

    /// One POST per attempt; 429, 5xx and network failures are retried with
    /// exponential backoff until the retries or the overall deadline run out.
    pub fn correct(&self, text: &str) -> Result<CorrectionResult> {
        let input = text.trim();
        if input.is_empty() {
            return Err(Error::Empty("text to correct"));
        }
        let token = self.token()?;
        let body = RequestBody {
            input,
            prompt: self.config.render_prompt(input),
        };
        let _slot = self.acquire();
        let timeout = Duration::from_millis(self.config.timeout_ms);
        let deadline = Instant::now() + timeout * (self.config.max_retries + 1);
        let mut last = String::from("deadline reached before the first attempt");
        let mut attempts = 0;
        for attempt in 0..=self.config.max_retries {
            let remaining = deadline.saturating_duration_since(Instant::now());
            if remaining.is_zero() {
                break;
            }
            attempts += 1;
            match self.attempt(&body, token.as_deref(), timeout.min(remaining)) {
                Attempt::Done(result) => return result,
                Attempt::Transient(msg) => last = msg,
            }
            if attempt < self.config.max_retries {
                let backoff = Duration::from_millis(self.config.backoff_ms.saturating_mul(1 << attempt.min(20)));
                thread::sleep(backoff.min(deadline.saturating_duration_since(Instant::now())));
            }
        }
        Err(Error::Transport(format!(
            "{} failed after {attempts} attempt(s): {last}",
            self.config.endpoint
        )))
    }
}

/// Single-call convenience around [`RemoteCorrector`].
pub fn correct_remote(text: &str, config: &RemoteCorrectorConfig) -> Result<CorrectionResult> {
    RemoteCorrector::new(config.clone())?.correct(text)
}
