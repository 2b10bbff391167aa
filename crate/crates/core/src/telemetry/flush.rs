//! Uploading spooled sessions with retry and backoff.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::spool::{SpoolError, SpoolStore};

pub const COLLECT_URL_ENV: &str = "DANSE_COLLECT_URL";
pub const SESSIONS_PATH: &str = "/v1/sessions";

pub trait Clock {
    fn now_ms(&self) -> u64;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0)
    }
}

/// Sends one session. `Ok(status)` for any HTTP response, `Err` when no
/// response arrived.
pub trait Transport {
    fn post(&self, idempotency_key: &str, body: &[u8]) -> Result<u16, String>;
}

/// POSTs to `{endpoint}/v1/sessions`.
pub struct HttpTransport {
    url: String,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(endpoint: &str) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(std::time::Duration::from_secs(30)))
            .build();
        HttpTransport {
            url: format!("{}{SESSIONS_PATH}", endpoint.trim_end_matches('/')),
            agent: config.into(),
        }
    }
}

impl Transport for HttpTransport {
    fn post(&self, idempotency_key: &str, body: &[u8]) -> Result<u16, String> {
        self.agent
            .post(&self.url)
            .header("Content-Type", "application/json")
            .header("Idempotency-Key", idempotency_key)
            .send(body)
            .map(|r| r.status().as_u16())
            .map_err(|e| e.to_string())
    }
}

/// The collect endpoint: the environment variable wins over the config.
pub fn resolve_endpoint(configured: Option<&str>) -> Option<String> {
    std::env::var(COLLECT_URL_ENV)
        .ok()
        .filter(|s| !s.is_empty())
        .or_else(|| configured.map(str::to_owned))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub base_ms: u64,
    pub factor: u64,
    pub cap_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            base_ms: 1000,
            factor: 2,
            cap_ms: 300_000,
        }
    }
}

impl RetryPolicy {
    /// Delay after the `attempts`-th consecutive failure (1-based).
    pub fn delay_ms(&self, attempts: u32) -> u64 {
        let mut d = self.base_ms;
        for _ in 1..attempts {
            d = d.saturating_mul(self.factor);
            if d >= self.cap_ms {
                break;
            }
        }
        d.min(self.cap_ms)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "camelCase")]
pub enum FlushOutcome {
    Delivered { status: u16 },
    Failed { attempts: u32, next_due_ms: u64, error: String },
    NotDue { next_due_ms: u64 },
    StoreError { error: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlushResult {
    pub session_id: String,
    #[serde(flatten)]
    pub outcome: FlushOutcome,
}

/// Attempts every due entry once. An entry is deleted only after a 2xx.
/// Errors stay per entry.
pub fn flush(
    store: &SpoolStore,
    transport: &dyn Transport,
    clock: &dyn Clock,
    policy: &RetryPolicy,
) -> Result<Vec<FlushResult>, SpoolError> {
    let mut results = Vec::new();
    for id in store.list()? {
        let outcome = flush_one(store, &id, transport, clock, policy)
            .unwrap_or_else(|e| FlushOutcome::StoreError { error: e.to_string() });
        results.push(FlushResult {
            session_id: id,
            outcome,
        });
    }
    Ok(results)
}

fn flush_one(
    store: &SpoolStore,
    id: &str,
    transport: &dyn Transport,
    clock: &dyn Clock,
    policy: &RetryPolicy,
) -> Result<FlushOutcome, SpoolError> {
    let mut entry = store.load(id)?;
    let now = clock.now_ms();
    if entry.next_due_ms > now {
        return Ok(FlushOutcome::NotDue {
            next_due_ms: entry.next_due_ms,
        });
    }
    let body = serde_json::to_vec(&entry.stats).expect("stats serialize");
    let error = match transport.post(&entry.stats.session_id, &body) {
        Ok(status) if (200..300).contains(&status) => {
            store.remove(id)?;
            return Ok(FlushOutcome::Delivered { status });
        }
        Ok(status) => format!("HTTP {status}"),
        Err(e) => e,
    };
    entry.attempts += 1;
    entry.next_due_ms = now + policy.delay_ms(entry.attempts);
    store.write(&entry)?;
    Ok(FlushOutcome::Failed {
        attempts: entry.attempts,
        next_due_ms: entry.next_due_ms,
        error,
    })
}
