//! HTTP client for an external entailment service.
//!
//! Wire protocol: `POST {endpoint}/score` with
//! `{"pairs":[{"id":..,"premise":..,"hypothesis":..}]}`, answered by
//! `{"scores":[{"id":..,"entail":p}]}`. Non-2xx answers carry
//! `{"error":".."}`. Scores are matched to pairs by id, never by position.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scorers::{ScoreRequest, Scorer};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WirePair {
    pub id: String,
    pub premise: String,
    pub hypothesis: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRequestBody {
    pub pairs: Vec<WirePair>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireScore {
    pub id: String,
    pub entail: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponseBody {
    pub scores: Vec<WireScore>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

/// Validates a `/score` response body against the ids that were sent and
/// returns the probabilities in request order.
///
/// Rejects unknown, duplicate or missing ids and any value outside [0, 1];
/// nothing is clamped.
pub fn validate_score_response(request_ids: &[String], body: &str) -> Result<Vec<f64>> {
    let resp: ScoreResponseBody = serde_json::from_str(body)
        .map_err(|e| Error::Protocol(format!("malformed response: {e}")))?;
    let position: HashMap<&str, usize> = request_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut out: Vec<Option<f64>> = vec![None; request_ids.len()];
    for s in &resp.scores {
        let &i = position
            .get(s.id.as_str())
            .ok_or_else(|| Error::Protocol(format!("unknown id `{}` in response", s.id)))?;
        if !(s.entail.is_finite() && (0.0..=1.0).contains(&s.entail)) {
            return Err(Error::Protocol(format!(
                "probability {} for id `{}` outside [0, 1]",
                s.entail, s.id
            )));
        }
        if out[i].replace(s.entail).is_some() {
            return Err(Error::Protocol(format!(
                "duplicate id `{}` in response",
                s.id
            )));
        }
    }
    out.into_iter()
        .zip(request_ids)
        .map(|(p, id)| p.ok_or_else(|| Error::Protocol(format!("no score for id `{id}`"))))
        .collect()
}

#[derive(Clone, Debug)]
pub struct ExternalConfig {
    /// Base URL; `/score` is appended.
    pub endpoint: String,
    pub max_batch: usize,
    pub timeout: Duration,
    /// Extra attempts after a transport failure.
    pub max_retries: usize,
    pub backoff: Duration,
    /// Upper bound on batches in flight at once.
    pub parallel: usize,
}

impl ExternalConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        ExternalConfig {
            endpoint: endpoint.into(),
            max_batch: 32,
            timeout: Duration::from_secs(60),
            max_retries: 2,
            backoff: Duration::from_millis(200),
            parallel: 1,
        }
    }
}

pub struct ExternalClient {
    config: ExternalConfig,
    agent: ureq::Agent,
}

enum Attempt {
    Retry(Error),
    Fatal(Error),
}

impl ExternalClient {
    pub fn new(config: ExternalConfig) -> Result<Self> {
        if config.max_batch == 0 || config.parallel == 0 {
            return Err(Error::Scorer(
                "batch size and parallelism must be at least 1".into(),
            ));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(ExternalClient { config, agent })
    }

    fn url(&self) -> String {
        format!("{}/score", self.config.endpoint.trim_end_matches('/'))
    }

    fn attempt(
        &self,
        url: &str,
        body: &str,
        ids: &[String],
        n: usize,
    ) -> Result<Vec<f64>, Attempt> {
        let result = self
            .agent
            .post(url)
            .header("content-type", "application/json")
            .send(body);
        let mut resp = match result {
            Ok(r) => r,
            Err(ureq::Error::Timeout(t)) => {
                return Err(Attempt::Retry(Error::Timeout {
                    attempts: n,
                    detail: t.to_string(),
                }))
            }
            Err(e) => {
                return Err(Attempt::Retry(Error::Transport {
                    attempts: n,
                    detail: e.to_string(),
                }))
            }
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(ureq::Error::Timeout(t)) => {
                return Err(Attempt::Retry(Error::Timeout {
                    attempts: n,
                    detail: t.to_string(),
                }))
            }
            Err(e) => {
                return Err(Attempt::Retry(Error::Transport {
                    attempts: n,
                    detail: e.to_string(),
                }))
            }
        };
        if !(200..300).contains(&status) {
            let message = serde_json::from_str::<ErrorBody>(&text)
                .map(|b| b.error)
                .unwrap_or(text);
            let err = Error::Service { status, message };
            return Err(if status >= 500 || status == 429 {
                Attempt::Retry(err)
            } else {
                Attempt::Fatal(err)
            });
        }
        validate_score_response(ids, &text).map_err(Attempt::Fatal)
    }

    /// Sends one batch, retrying transport failures and 5xx/429 answers.
    /// Requests are idempotent so a retry never double-counts.
    fn send_batch(&self, pairs: Vec<WirePair>) -> Result<Vec<f64>> {
        let ids: Vec<String> = pairs.iter().map(|p| p.id.clone()).collect();
        let body = serde_json::to_string(&ScoreRequestBody { pairs })?;
        let url = self.url();
        let mut attempt = 1;
        loop {
            match self.attempt(&url, &body, &ids, attempt) {
                Ok(v) => return Ok(v),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(e)) if attempt > self.config.max_retries => return Err(e),
                Err(Attempt::Retry(e)) => {
                    log::warn!("scoring attempt {attempt} failed: {e}; retrying");
                    thread::sleep(self.config.backoff * (1 << (attempt - 1).min(6)) as u32);
                    attempt += 1;
                }
            }
        }
    }

    /// Scores all pairs, splitting them into batches of at most
    /// `max_batch` with up to `parallel` batches in flight.
    pub fn external_score(&self, requests: &[ScoreRequest<'_>]) -> Result<Vec<f64>> {
        let batches: Vec<Vec<WirePair>> = requests
            .chunks(self.config.max_batch)
            .enumerate()
            .map(|(b, chunk)| {
                chunk
                    .iter()
                    .enumerate()
                    .map(|(i, r)| WirePair {
                        id: (b * self.config.max_batch + i).to_string(),
                        premise: r.premise.to_string(),
                        hypothesis: r.hypothesis.to_string(),
                    })
                    .collect()
            })
            .collect();
        let n_batches = batches.len();
        let slots: Vec<Mutex<Option<Vec<WirePair>>>> =
            batches.into_iter().map(|b| Mutex::new(Some(b))).collect();
        let results: Vec<Mutex<Option<Result<Vec<f64>>>>> =
            (0..n_batches).map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.config.parallel.min(n_batches);
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let b = next.fetch_add(1, Ordering::SeqCst);
                    if b >= n_batches {
                        break;
                    }
                    let pairs = slots[b].lock().unwrap().take().expect("batch taken once");
                    let r = self.send_batch(pairs);
                    let failed = r.is_err();
                    *results[b].lock().unwrap() = Some(r);
                    if failed {
                        // stop handing out further batches
                        next.store(n_batches, Ordering::SeqCst);
                        break;
                    }
                });
            }
        });
        let mut out = Vec::with_capacity(requests.len());
        for r in results {
            match r.into_inner().unwrap() {
                Some(Ok(v)) => out.extend(v),
                Some(Err(e)) => return Err(e),
                None => {}
            }
        }
        if out.len() != requests.len() {
            return Err(Error::Scorer("external scoring aborted".into()));
        }
        Ok(out)
    }
}

impl Scorer for ExternalClient {
    fn name(&self) -> &str {
        "external"
    }

    fn score_batch(&self, batch: &[ScoreRequest<'_>]) -> Result<Vec<f64>> {
        self.external_score(batch)
    }
}
