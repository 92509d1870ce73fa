//! Rate-limited, retrying GET client with per-host quarantine.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use fedipol_core::Domain;
use thiserror::Error;

use crate::clock::Clock;
use crate::limiter::{RateLimit, RateLimiter};
use crate::transport::{HttpResponse, Request, Transport, TransportError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FetchError {
    #[error("{0} is quarantined")]
    Quarantined(String),
    #[error("{host}: {source}")]
    Transport {
        host: String,
        #[source]
        source: TransportError,
    },
    #[error("{host}{path}: HTTP {status}")]
    Status { host: String, path: String, status: u16 },
    #[error("{host}{path}: still rate limited after {attempts} attempts")]
    RateLimited { host: String, path: String, attempts: u32 },
    #[error("{host}{path}: malformed response: {message}")]
    Malformed { host: String, path: String, message: String },
}

impl FetchError {
    /// The host answered at all, even if with an error status.
    pub fn host_answered(&self) -> bool {
        matches!(self, FetchError::Status { .. } | FetchError::RateLimited { .. } | FetchError::Malformed { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientConfig {
    pub rate: RateLimit,
    /// Attempts per request on timeouts, connection errors and 5xx.
    pub max_attempts: u32,
    /// 429 answers tolerated per request before giving up.
    pub max_rate_retries: u32,
    /// Consecutive failed requests after which a host is skipped.
    pub quarantine_after: u32,
    /// Base delay of the exponential backoff between attempts.
    pub backoff: Duration,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            rate: RateLimit::default(),
            max_attempts: 3,
            max_rate_retries: 5,
            quarantine_after: 5,
            backoff: Duration::from_millis(500),
        }
    }
}

/// Bearer tokens per host, given explicitly or read from the environment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tokens {
    explicit: HashMap<String, String>,
    from_env: bool,
}

impl Tokens {
    pub fn none() -> Self {
        Tokens::default()
    }

    /// Looks tokens up in the environment on first use of each host,
    /// including hosts discovered during the crawl.
    pub fn from_env() -> Self {
        Tokens {
            explicit: HashMap::new(),
            from_env: true,
        }
    }

    pub fn insert(&mut self, host: &str, token: impl Into<String>) {
        self.explicit.insert(host.to_string(), token.into());
    }

    /// Name of the environment variable holding the token for `host`:
    /// `FEDIPOL_TOKEN_` followed by the host with dots turned into dashes.
    pub fn env_var(host: &str) -> String {
        format!("FEDIPOL_TOKEN_{}", host.replace('.', "-"))
    }

    /// Explicit tokens win. From the environment the dashed name is tried
    /// first, then its upper-case form with underscores, for shells that
    /// reject dashes in variable names.
    pub fn get(&self, host: &str) -> Option<String> {
        if let Some(t) = self.explicit.get(host) {
            return Some(t.clone());
        }
        if !self.from_env {
            return None;
        }
        let dashed = Self::env_var(host);
        let underscored = dashed.replace('-', "_").to_uppercase();
        std::env::var(&dashed)
            .ok()
            .or_else(|| std::env::var(underscored).ok())
            .filter(|t| !t.trim().is_empty())
    }
}


#[derive(Debug, Default)]
struct Health {
    answered: bool,
    consecutive_failures: u32,
    quarantined: bool,
}

pub struct Client {
    transport: Arc<dyn Transport>,
    clock: Arc<dyn Clock>,
    limiter: RateLimiter,
    tokens: Tokens,
    config: ClientConfig,
    health: Mutex<HashMap<String, Health>>,
}

fn retry_after(resp: &HttpResponse, clock: &dyn Clock) -> Option<Duration> {
    let raw = resp.header("Retry-After")?.trim();
    if let Ok(secs) = raw.parse::<f64>() {
        return (secs >= 0.0 && secs.is_finite()).then(|| Duration::from_secs_f64(secs));
    }
    let at = chrono::DateTime::parse_from_rfc2822(raw).ok()?;
    Some(crate::clock::until(clock.now(), at.with_timezone(&chrono::Utc)))
}

impl Client {
    pub fn new(transport: Arc<dyn Transport>, clock: Arc<dyn Clock>, config: ClientConfig, tokens: Tokens) -> Self {
        Client {
            limiter: RateLimiter::new(config.rate, clock.clone()),
            transport,
            clock,
            tokens,
            config,
            health: Mutex::new(HashMap::new()),
        }
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn config(&self) -> &ClientConfig {
        &self.config
    }

    pub fn is_quarantined(&self, host: &str) -> bool {
        self.health.lock().unwrap().get(host).is_some_and(|h| h.quarantined)
    }

    /// Whether `host` has returned any HTTP response so far.
    pub fn answered(&self, host: &Domain) -> bool {
        self.health.lock().unwrap().get(host.as_str()).is_some_and(|h| h.answered)
    }

    fn mark_answered(&self, host: &str) {
        self.health.lock().unwrap().entry(host.to_string()).or_default().answered = true;
    }

    pub fn quarantined_hosts(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .health
            .lock()
            .unwrap()
            .iter()
            .filter(|(_, h)| h.quarantined)
            .map(|(k, _)| k.clone())
            .collect();
        v.sort();
        v
    }

    fn record(&self, host: &str, ok: bool) {
        let mut health = self.health.lock().unwrap();
        let h = health.entry(host.to_string()).or_default();
        if ok {
            h.consecutive_failures = 0;
        } else {
            h.consecutive_failures += 1;
            if h.consecutive_failures >= self.config.quarantine_after && !h.quarantined {
                log::warn!("quarantining {host} after {} consecutive failures", h.consecutive_failures);
                h.quarantined = true;
            }
        }
    }

    fn backoff(&self, attempt: u32) -> Duration {
        self.config.backoff.saturating_mul(1 << attempt.min(16))
    }

    /// GET with rate limiting and retries. Any status other than 429 and
    /// 5xx is returned to the caller.
    pub fn get(&self, host: &Domain, path: &str) -> Result<HttpResponse, FetchError> {
        let host = host.as_str();
        if self.is_quarantined(host) {
            return Err(FetchError::Quarantined(host.to_string()));
        }
        let req = Request {
            host: host.to_string(),
            path: path.to_string(),
            bearer: self.tokens.get(host),
        };
        let mut failures = 0u32;
        let mut limited = 0u32;
        loop {
            self.limiter.acquire(host);
            let result = self.transport.get(&req);
            if result.is_ok() {
                self.mark_answered(host);
            }
            match result {
                Ok(resp) if resp.status == 429 => {
                    limited += 1;
                    if limited > self.config.max_rate_retries {
                        self.record(host, false);
                        return Err(FetchError::RateLimited {
                            host: host.to_string(),
                            path: path.to_string(),
                            attempts: limited,
                        });
                    }
                    let wait = retry_after(&resp, self.clock.as_ref()).unwrap_or_else(|| self.backoff(limited));
                    log::info!("{host}{path}: 429, retrying in {wait:?}");
                    self.clock.sleep(wait);
                }
                Ok(resp) if resp.status >= 500 => {
                    failures += 1;
                    if failures >= self.config.max_attempts {
                        self.record(host, false);
                        return Err(FetchError::Status {
                            host: host.to_string(),
                            path: path.to_string(),
                            status: resp.status,
                        });
                    }
                    self.clock.sleep(self.backoff(failures - 1));
                }
                Ok(resp) => {
                    self.record(host, true);
                    return Ok(resp);
                }
                Err(e) => {
                    failures += 1;
                    if failures >= self.config.max_attempts {
                        log::warn!("{host}{path}: giving up after {failures} attempts: {e}");
                        self.record(host, false);
                        return Err(FetchError::Transport {
                            host: host.to_string(),
                            source: e,
                        });
                    }
                    self.clock.sleep(self.backoff(failures - 1));
                }
            }
        }
    }
}
