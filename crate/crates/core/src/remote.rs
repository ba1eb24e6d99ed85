//! HTTP-backed victims and similarity scorers.
//!
//! A remote victim answers `POST <endpoint>` with `{"text": ...}` in the body
//! and returns `{"label": <class id>, "name": <optional class name>}`. A
//! remote similarity scorer takes `{"a": ..., "b": ...}` and returns
//! `{"similarity": <number>}`. Attempts that reach the server spend budget,
//! whether or not they succeed; attempts the transport drops do not.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::oracle::{HardLabelOracle, OracleError, QueryLedger};
use crate::scalar::Scalar;
use crate::similarity::{SimilarityError, SimilarityProvider};
use crate::text::{Label, TokenSequence};

const DEFAULT_MAX_ATTEMPTS: u32 = 4;
const DEFAULT_BACKOFF: Duration = Duration::from_millis(500);
const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Serialize)]
struct PredictRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct PredictResponse {
    label: usize,
    #[serde(default)]
    name: Option<String>,
}

#[derive(Serialize)]
struct SimilarityRequest<'a> {
    a: &'a str,
    b: &'a str,
}

#[derive(Deserialize)]
struct SimilarityResponse {
    similarity: f64,
}

/// A classifier living behind an HTTP endpoint.
pub struct RemoteVictim {
    client: reqwest::blocking::Client,
    endpoint: String,
    num_classes: usize,
    max_attempts: u32,
    initial_backoff: Duration,
}

impl RemoteVictim {
    pub fn new(endpoint: impl Into<String>, num_classes: usize) -> Self {
        RemoteVictim {
            client: client_with_timeout(DEFAULT_TIMEOUT),
            endpoint: endpoint.into(),
            num_classes,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            initial_backoff: DEFAULT_BACKOFF,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.client = client_with_timeout(timeout);
        self
    }

    pub fn with_retry(mut self, max_attempts: u32, initial_backoff: Duration) -> Self {
        self.max_attempts = max_attempts.max(1);
        self.initial_backoff = initial_backoff;
        self
    }

    fn request(
        &self,
        text: &TokenSequence,
        mut ledger: Option<&mut QueryLedger>,
    ) -> Result<Label, OracleError> {
        let body = text.text();
        let mut delay = self.initial_backoff;
        let mut last_err = OracleError::Transport("no attempt was made".to_string());
        for attempt in 0..self.max_attempts {
            if attempt > 0 {
                thread::sleep(delay);
                delay *= 2;
            }
            if let Some(ledger) = ledger.as_deref_mut() {
                if ledger.remaining() == 0 {
                    return Err(OracleError::BudgetExhausted);
                }
            }
            let sent = self
                .client
                .post(&self.endpoint)
                .json(&PredictRequest { text: &body })
                .send();
            let response = match sent {
                Ok(response) => response,
                Err(e) if e.is_timeout() => {
                    last_err = OracleError::Timeout;
                    continue;
                }
                Err(e) => {
                    last_err = OracleError::Transport(e.to_string());
                    continue;
                }
            };
            // The request reached the server, so it counts against the
            // budget no matter what comes back.
            if let Some(ledger) = ledger.as_deref_mut() {
                ledger.record().expect("remaining budget was checked");
            }
            let status = response.status();
            if status.is_success() {
                let parsed: PredictResponse = response
                    .json()
                    .map_err(|e| OracleError::MalformedResponse(e.to_string()))?;
                if parsed.label >= self.num_classes {
                    return Err(OracleError::MalformedResponse(format!(
                        "label {} out of range for {} classes",
                        parsed.label, self.num_classes
                    )));
                }
                let mut label = Label::new(parsed.label);
                label.name = parsed.name;
                return Ok(label);
            }
            if status.as_u16() == 429 || status.is_server_error() {
                last_err = OracleError::ServerError(status.as_u16());
                continue;
            }
            return Err(OracleError::ServerError(status.as_u16()));
        }
        Err(last_err)
    }
}

impl HardLabelOracle for RemoteVictim {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn predict(&self, text: &TokenSequence) -> Result<Label, OracleError> {
        self.request(text, None)
    }

    fn predict_metered(
        &self,
        text: &TokenSequence,
        ledger: &mut QueryLedger,
    ) -> Result<Label, OracleError> {
        self.request(text, Some(ledger))
    }
}

/// A sentence-similarity scorer living behind an HTTP endpoint. Scores are
/// clamped into `[-1, 1]`; none of this traffic touches the query ledger.
pub struct RemoteSimilarity {
    client: reqwest::blocking::Client,
    endpoint: String,
    max_attempts: u32,
    initial_backoff: Duration,
}

impl RemoteSimilarity {
    pub fn new(endpoint: impl Into<String>) -> Self {
        RemoteSimilarity {
            client: client_with_timeout(DEFAULT_TIMEOUT),
            endpoint: endpoint.into(),
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            initial_backoff: DEFAULT_BACKOFF,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.client = client_with_timeout(timeout);
        self
    }

    pub fn with_retry(mut self, max_attempts: u32, initial_backoff: Duration) -> Self {
        self.max_attempts = max_attempts.max(1);
        self.initial_backoff = initial_backoff;
        self
    }

    fn request(&self, a: &str, b: &str) -> Result<f64, SimilarityError> {
        let mut delay = self.initial_backoff;
        let mut last_err = SimilarityError::Transport("no attempt was made".to_string());
        for attempt in 0..self.max_attempts {
            if attempt > 0 {
                thread::sleep(delay);
                delay *= 2;
            }
            let sent = self
                .client
                .post(&self.endpoint)
                .json(&SimilarityRequest { a, b })
                .send();
            let response = match sent {
                Ok(response) => response,
                Err(e) if e.is_timeout() => {
                    last_err = SimilarityError::Timeout;
                    continue;
                }
                Err(e) => {
                    last_err = SimilarityError::Transport(e.to_string());
                    continue;
                }
            };
            let status = response.status();
            if status.is_success() {
                let parsed: SimilarityResponse = response
                    .json()
                    .map_err(|e| SimilarityError::MalformedResponse(e.to_string()))?;
                if !parsed.similarity.is_finite() {
                    return Err(SimilarityError::MalformedResponse(
                        "similarity is not finite".to_string(),
                    ));
                }
                return Ok(parsed.similarity.clamp(-1.0, 1.0));
            }
            if status.as_u16() == 429 || status.is_server_error() {
                last_err = SimilarityError::Transport(format!("server returned {status}"));
                continue;
            }
            return Err(SimilarityError::Transport(format!(
                "server returned {status}"
            )));
        }
        Err(last_err)
    }
}

impl<F: Scalar> SimilarityProvider<F> for RemoteSimilarity {
    fn similarity(&self, a: &TokenSequence, b: &TokenSequence) -> Result<F, SimilarityError> {
        self.request(&a.text(), &b.text()).map(F::from_config)
    }
}

fn client_with_timeout(timeout: Duration) -> reqwest::blocking::Client {
    reqwest::blocking::Client::builder()
        .timeout(timeout)
        .build()
        .expect("default client configuration is valid")
}
