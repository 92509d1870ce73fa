//! In-memory federation answering the crawler's endpoints, with scripted
//! failures and a log of every request it received.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Duration, TimeZone, Utc};
use fedipol_core::{Domain, Software, UserRef};
use serde_json::{json, Value};

use crate::clock::Clock;
use crate::transport::{HttpResponse, Request, Transport, TransportError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockBlock {
    pub domain: String,
    pub severity: String,
    pub comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockWeek {
    pub week: DateTime<Utc>,
    pub statuses: u64,
    pub logins: u64,
    pub registrations: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockHost {
    pub software: Software,
    /// Usernames; the local id of the n-th account is `n + 1`.
    pub accounts: Vec<String>,
    pub directory: Vec<String>,
    /// `None` answers 404.
    pub blocks: Option<Vec<MockBlock>>,
    pub activity: Option<Vec<MockWeek>>,
    /// Accounts whose link lists answer 403.
    pub private: BTreeSet<String>,
    pub reachable: bool,
}

impl MockHost {
    pub fn new(software: Software) -> Self {
        MockHost {
            software,
            accounts: Vec::new(),
            directory: Vec::new(),
            blocks: Some(Vec::new()),
            activity: None,
            private: BTreeSet::new(),
            reachable: true,
        }
    }

    fn local_id(&self, username: &str) -> Option<usize> {
        self.accounts.iter().position(|a| a == username).map(|i| i + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockResponse {
    Status { status: u16, retry_after: Option<String> },
    Timeout,
}

impl MockResponse {
    pub fn too_many(retry_after_secs: u64) -> Self {
        MockResponse::Status {
            status: 429,
            retry_after: Some(retry_after_secs.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoggedRequest {
    pub host: String,
    pub path: String,
    pub at: DateTime<Utc>,
    pub status: Option<u16>,
}

pub struct MockFederation {
    pub hosts: BTreeMap<String, MockHost>,
    /// (follower, followed) pairs in listing order.
    pub follows: Vec<(UserRef, UserRef)>,
    /// Largest page the server hands out, whatever `limit` asks for.
    pub max_page: usize,
    clock: Arc<dyn Clock>,
    scripts: Mutex<HashMap<(String, String), VecDeque<MockResponse>>>,
    log: Mutex<Vec<LoggedRequest>>,
    remote_ids: Mutex<HashMap<UserRef, usize>>,
}

/// Start of the fixture's crawl clock.
pub fn fixture_start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2023, 11, 6, 12, 0, 0).unwrap()
}

fn query(path: &str) -> (String, HashMap<String, String>) {
    let (p, q) = path.split_once('?').unwrap_or((path, ""));
    let params = url::form_urlencoded::parse(q.as_bytes()).into_owned().collect();
    (p.to_string(), params)
}

impl MockFederation {
    pub fn new(clock: Arc<dyn Clock>) -> Self {
        MockFederation {
            hosts: BTreeMap::new(),
            follows: Vec::new(),
            max_page: 40,
            clock,
            scripts: Mutex::new(HashMap::new()),
            log: Mutex::new(Vec::new()),
            remote_ids: Mutex::new(HashMap::new()),
        }
    }

    /// Two instances, five users, six follows, three blocks and twelve
    /// weeks of activity on the first instance.
    pub fn fixture(clock: Arc<dyn Clock>) -> Self {
        let mut fed = MockFederation::new(clock);
        let mut a = MockHost::new(Software::Mastodon);
        a.accounts = vec!["alice".into(), "bob".into(), "carol".into()];
        a.directory = vec!["alice".into(), "bob".into()];
        a.blocks = Some(vec![
            MockBlock {
                domain: "spam.example".into(),
                severity: "suspend".into(),
                comment: Some("spam".into()),
            },
            MockBlock {
                domain: "ev*l.example".into(),
                severity: "silence".into(),
                comment: None,
            },
        ]);
        let last = Utc.with_ymd_and_hms(2023, 10, 30, 0, 0, 0).unwrap();
        a.activity = Some(
            (0..12)
                .map(|w| MockWeek {
                    week: last - Duration::weeks(w),
                    statuses: 1000 + 10 * w as u64,
                    logins: 50 + w as u64,
                    registrations: w as u64 % 3,
                })
                .collect(),
        );
        let mut b = MockHost::new(Software::Pleroma);
        b.accounts = vec!["dave".into(), "erin".into()];
        b.directory = vec!["dave".into()];
        b.blocks = Some(vec![MockBlock {
            domain: "a.example".into(),
            severity: "suspend".into(),
            comment: Some("harassment".into()),
        }]);
        fed.hosts.insert("a.example".into(), a);
        fed.hosts.insert("b.example".into(), b);
        let u = |name: &str, host: &str| UserRef::new(name, Domain::parse(host).unwrap());
        fed.follows = vec![
            (u("alice", "a.example"), u("bob", "a.example")),
            (u("bob", "a.example"), u("alice", "a.example")),
            (u("alice", "a.example"), u("dave", "b.example")),
            (u("dave", "b.example"), u("erin", "b.example")),
            (u("erin", "b.example"), u("carol", "a.example")),
            (u("carol", "a.example"), u("alice", "a.example")),
        ];
        fed
    }

    /// Answers the next requests to `host` whose path starts with
    /// `path_prefix` with `responses`, in order, before serving normally.
    pub fn script(&self, host: &str, path_prefix: &str, responses: Vec<MockResponse>) {
        self.scripts
            .lock()
            .unwrap()
            .entry((host.to_string(), path_prefix.to_string()))
            .or_default()
            .extend(responses);
    }

    pub fn requests(&self) -> Vec<LoggedRequest> {
        self.log.lock().unwrap().clone()
    }

    /// Largest number of requests to one host inside any window of
    /// `window` length.
    pub fn max_requests_in_window(&self, host: &str, window: std::time::Duration) -> usize {
        let window = Duration::from_std(window).unwrap_or(Duration::MAX);
        let times: Vec<DateTime<Utc>> = self.requests().into_iter().filter(|r| r.host == host).map(|r| r.at).collect();
        let mut best = 0;
        let mut lo = 0;
        for hi in 0..times.len() {
            while times[hi] - times[lo] >= window {
                lo += 1;
            }
            best = best.max(hi - lo + 1);
        }
        best
    }

    fn scripted(&self, host: &str, path: &str) -> Option<MockResponse> {
        let mut scripts = self.scripts.lock().unwrap();
        let key = scripts
            .iter()
            .filter(|((h, p), q)| h == host && path.starts_with(p.as_str()) && !q.is_empty())
            .map(|(k, _)| k.clone())
            .max_by_key(|(_, p)| p.len())?;
        scripts.get_mut(&key)?.pop_front()
    }

    fn account_json(&self, server: &str, user: &UserRef) -> Value {
        if user.home.as_str() == server {
            let id = self.hosts[server].local_id(&user.account_id).unwrap_or(0);
            json!({"id": id.to_string(), "username": user.account_id, "acct": user.account_id})
        } else {
            // remote accounts carry ids that mean nothing on their home server
            let mut ids = self.remote_ids.lock().unwrap();
            let next = 1000 + ids.len();
            let id = *ids.entry(user.clone()).or_insert(next);
            json!({"id": id, "username": user.account_id, "acct": user.to_string()})
        }
    }

    fn list_page(&self, server: &str, base: &str, users: Vec<&UserRef>, params: &HashMap<String, String>) -> HttpResponse {
        let limit = params.get("limit").and_then(|l| l.parse().ok()).unwrap_or(40usize).clamp(1, self.max_page);
        let offset: usize = params.get("max_id").and_then(|c| c.parse().ok()).unwrap_or(0);
        let page: Vec<Value> = users.iter().skip(offset).take(limit).map(|u| self.account_json(server, u)).collect();
        let body = serde_json::to_vec(&page).unwrap();
        let mut resp = HttpResponse::new(200, body);
        if offset + limit < users.len() {
            resp = resp.with_header(
                "Link",
                format!(
                    "<https://{server}{base}?limit={limit}&max_id={}>; rel=\"next\", <https://{server}{base}?since_id=0>; rel=\"prev\"",
                    offset + limit
                ),
            );
        }
        resp
    }

    fn serve(&self, req: &Request) -> Result<HttpResponse, TransportError> {
        let Some(host) = self.hosts.get(&req.host).filter(|h| h.reachable) else {
            return Err(TransportError::Connect(format!("{} unreachable", req.host)));
        };
        if let Some(s) = self.scripted(&req.host, &req.path) {
            return match s {
                MockResponse::Timeout => Err(TransportError::Timeout),
                MockResponse::Status { status, retry_after } => {
                    let mut r = HttpResponse::new(status, b"{\"error\":\"scripted\"}".to_vec());
                    if let Some(ra) = retry_after {
                        r = r.with_header("Retry-After", ra);
                    }
                    Ok(r)
                }
            };
        }
        let server = req.host.as_str();
        let domain = Domain::parse(server).map_err(|e| TransportError::Other(e.to_string()))?;
        let (path, params) = query(&req.path);
        let ok = |v: Value| Ok(HttpResponse::new(200, serde_json::to_vec(&v).unwrap()));
        let not_found = || Ok(HttpResponse::new(404, b"{\"error\":\"Record not found\"}".to_vec()));
        match path.as_str() {
            "/.well-known/nodeinfo" => ok(json!({"links": [{
                "rel": "http://nodeinfo.diaspora.software/ns/schema/2.0",
                "href": format!("https://{server}/nodeinfo/2.0"),
            }]})),
            "/nodeinfo/2.0" => ok(json!({"version": "2.0", "software": {"name": host.software.name(), "version": "1.0"}})),
            "/api/v1/directory" => {
                let limit = params.get("limit").and_then(|l| l.parse().ok()).unwrap_or(40usize);
                let listed: Vec<Value> = host
                    .directory
                    .iter()
                    .take(limit)
                    .map(|n| self.account_json(server, &UserRef::new(n.as_str(), domain.clone())))
                    .collect();
                ok(Value::Array(listed))
            }
            "/api/v1/accounts/lookup" => match params.get("acct").filter(|a| host.local_id(a).is_some()) {
                Some(name) => ok(self.account_json(server, &UserRef::new(name.as_str(), domain.clone()))),
                None => not_found(),
            },
            "/api/v1/instance/domain_blocks" => match &host.blocks {
                Some(blocks) => ok(blocks
                    .iter()
                    .map(|b| {
                        let mut v = json!({"domain": b.domain, "digest": "0", "severity": b.severity});
                        if let Some(c) = &b.comment {
                            v["comment"] = json!(c);
                        }
                        v
                    })
                    .collect()),
                None => not_found(),
            },
            "/api/v1/instance/activity" => match &host.activity {
                Some(weeks) => ok(weeks
                    .iter()
                    .map(|w| {
                        json!({
                            "week": w.week.timestamp().to_string(),
                            "statuses": w.statuses.to_string(),
                            "logins": w.logins.to_string(),
                            "registrations": w.registrations.to_string(),
                        })
                    })
                    .collect()),
                None => not_found(),
            },
            p => {
                let parts: Vec<&str> = p.trim_start_matches('/').split('/').collect();
                let ["api", "v1", "accounts", id, which @ ("followers" | "following")] = parts[..] else {
                    return not_found();
                };
                let Some(name) = id.parse::<usize>().ok().and_then(|i| i.checked_sub(1)).and_then(|i| host.accounts.get(i)) else {
                    return not_found();
                };
                if host.private.contains(name) {
                    return Ok(HttpResponse::new(403, b"{\"error\":\"This action is not allowed\"}".to_vec()));
                }
                let me = UserRef::new(name.as_str(), domain.clone());
                let users: Vec<&UserRef> = self
                    .follows
                    .iter()
                    .filter_map(|(a, b)| match which {
                        "followers" => (b == &me).then_some(a),
                        _ => (a == &me).then_some(b),
                    })
                    .collect();
                Ok(self.list_page(server, p, users, &params))
            }
        }
    }
}

impl Transport for MockFederation {
    fn get(&self, req: &Request) -> Result<HttpResponse, TransportError> {
        let at = self.clock.now();
        let result = self.serve(req);
        self.log.lock().unwrap().push(LoggedRequest {
            host: req.host.clone(),
            path: req.path.clone(),
            at,
            status: result.as_ref().ok().map(|r| r.status),
        });
        result
    }
}
