use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{DateTime, Utc};

use crate::clock::{until, Clock};

/// At most `requests` per host in any window of length `window`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateLimit {
    pub requests: u32,
    pub window: Duration,
}

impl Default for RateLimit {
    fn default() -> Self {
        RateLimit {
            requests: 300,
            window: Duration::from_secs(300),
        }
    }
}

impl fmt::Display for RateLimit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.requests, self.window.as_secs_f64())
    }
}

impl FromStr for RateLimit {
    type Err = String;

    /// `<requests>/<seconds>`, e.g. `300/300`.
    fn from_str(s: &str) -> Result<Self, String> {
        let (r, w) = s.split_once('/').ok_or_else(|| format!("rate {s:?} is not <requests>/<seconds>"))?;
        let requests: u32 = r.trim().parse().map_err(|_| format!("bad request count in {s:?}"))?;
        let secs: f64 = w.trim().parse().map_err(|_| format!("bad window in {s:?}"))?;
        if requests == 0 || !(secs > 0.0 && secs.is_finite()) {
            return Err(format!("rate {s:?} must have positive count and window"));
        }
        Ok(RateLimit {
            requests,
            window: Duration::from_secs_f64(secs),
        })
    }
}

/// Sliding-window limiter keyed by host.
pub struct RateLimiter {
    limit: RateLimit,
    clock: Arc<dyn Clock>,
    issued: Mutex<HashMap<String, VecDeque<DateTime<Utc>>>>,
}

impl RateLimiter {
    pub fn new(limit: RateLimit, clock: Arc<dyn Clock>) -> Self {
        RateLimiter {
            limit,
            clock,
            issued: Mutex::new(HashMap::new()),
        }
    }

    pub fn limit(&self) -> RateLimit {
        self.limit
    }

    /// Blocks until a request to `host` fits in the window, then records it.
    pub fn acquire(&self, host: &str) {
        let window = chrono::Duration::from_std(self.limit.window).unwrap_or(chrono::Duration::MAX);
        loop {
            let now = self.clock.now();
            let wait = {
                let mut issued = self.issued.lock().unwrap();
                let q = issued.entry(host.to_string()).or_default();
                while q.front().is_some_and(|t| *t + window <= now) {
                    q.pop_front();
                }
                if q.len() < self.limit.requests as usize {
                    q.push_back(now);
                    return;
                }
                until(now, q[0] + window)
            };
            log::debug!("rate limit reached for {host}, waiting {wait:?}");
            self.clock.sleep(wait.max(Duration::from_millis(1)));
        }
    }
}
