//! Mastodon-compatible endpoints and their response parsers.

use chrono::{DateTime, TimeZone, Utc};
use fedipol_core::{ActivityRecord, Domain, DomainBlockRecord, Software, UserRef};
use serde_json::Value;

use crate::client::{Client, FetchError};
use crate::transport::HttpResponse;

/// An account as listed by a server, with the id that server uses for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Account {
    pub local_id: String,
    pub user: UserRef,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccountPage {
    pub accounts: Vec<Account>,
    /// Cursor of the following page, from the `Link: rel="next"` header.
    pub next: Option<String>,
    /// Entries that could not be parsed.
    pub dropped: usize,
    /// The server refused to list these links (401 or 403).
    pub private: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockEntry {
    pub domain: Domain,
    pub severity: String,
    pub comment: String,
    pub obfuscated: bool,
}

impl BlockEntry {
    pub fn into_record(self, blocker: &Domain, observed_at: DateTime<Utc>) -> DomainBlockRecord {
        DomainBlockRecord {
            blocker: blocker.clone(),
            blocked_domain: self.domain,
            severity: self.severity,
            comment: self.comment,
            obfuscated: self.obfuscated,
            observed_at,
        }
    }
}

/// Outcome of polling an optional endpoint: servers may decline to publish.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Published<T> {
    Yes(T),
    No,
}

impl<T> Published<T> {
    pub fn is_published(&self) -> bool {
        matches!(self, Published::Yes(_))
    }

    pub fn unwrap_or_default(self) -> T
    where
        T: Default,
    {
        match self {
            Published::Yes(v) => v,
            Published::No => T::default(),
        }
    }
}

/// Weekly activity entries reported by an instance, most recent first.
pub const ACTIVITY_WEEKS: usize = 12;

fn json(host: &Domain, path: &str, resp: &HttpResponse) -> Result<Value, FetchError> {
    serde_json::from_slice(&resp.body).map_err(|e| FetchError::Malformed {
        host: host.to_string(),
        path: path.to_string(),
        message: e.to_string(),
    })
}

fn status_error(host: &Domain, path: &str, status: u16) -> FetchError {
    FetchError::Status {
        host: host.to_string(),
        path: path.to_string(),
        status,
    }
}

fn value_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) if !s.is_empty() => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn value_u64(v: &Value) -> Option<u64> {
    match v {
        Value::Number(n) => n.as_u64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// One account object. `acct` is `user` for local accounts and
/// `user@host` for remote ones.
pub fn parse_account(v: &Value, server: &Domain) -> Option<Account> {
    let local_id = value_string(v.get("id")?)?;
    let acct = v.get("acct").and_then(Value::as_str).or_else(|| v.get("username").and_then(Value::as_str))?;
    let user = UserRef::from_acct(acct, server)?;
    Some(Account { local_id, user })
}

/// `max_id` of the `rel="next"` entry of a Link header.
pub fn next_cursor(link: &str) -> Option<String> {
    for part in link.split(',') {
        let mut pieces = part.split(';');
        let target = pieces.next()?.trim();
        let is_next = pieces.any(|p| {
            let p = p.trim();
            p == "rel=\"next\"" || p == "rel=next"
        });
        if !is_next {
            continue;
        }
        let target = target.trim_start_matches('<').trim_end_matches('>');
        let url = url::Url::parse(target)
            .or_else(|_| url::Url::parse("http://placeholder.invalid").and_then(|b| b.join(target)))
            .ok()?;
        return url.query_pairs().find(|(k, _)| k == "max_id").map(|(_, v)| v.into_owned());
    }
    None
}

pub fn parse_account_page(body: &Value, link: Option<&str>, server: &Domain) -> Option<AccountPage> {
    let items = body.as_array()?;
    let mut page = AccountPage::default();
    for item in items {
        match parse_account(item, server) {
            Some(a) => page.accounts.push(a),
            None => page.dropped += 1,
        }
    }
    // an empty page ends the listing even if a cursor is advertised
    if !items.is_empty() {
        page.next = link.and_then(next_cursor);
    }
    Some(page)
}

pub fn parse_domain_blocks(body: &Value) -> Option<Vec<BlockEntry>> {
    let items = body.as_array()?;
    let mut out = Vec::new();
    for item in items {
        let Some(raw) = item.get("domain").and_then(Value::as_str) else {
            continue;
        };
        let domain = match Domain::parse(raw) {
            Ok(d) => d,
            Err(_) if raw.contains('*') => Domain::literal(raw),
            Err(_) => continue,
        };
        out.push(BlockEntry {
            obfuscated: domain.is_obfuscated(),
            domain,
            severity: item.get("severity").and_then(Value::as_str).unwrap_or("suspend").to_string(),
            comment: item.get("comment").and_then(Value::as_str).unwrap_or("").to_string(),
        });
    }
    Some(out)
}

pub fn parse_activity(body: &Value, instance: &Domain) -> Option<Vec<ActivityRecord>> {
    let items = body.as_array()?;
    let mut out: Vec<ActivityRecord> = items
        .iter()
        .filter_map(|item| {
            let week = value_u64(item.get("week")?)?;
            let week_start = Utc.timestamp_opt(i64::try_from(week).ok()?, 0).single()?;
            Some(ActivityRecord {
                instance: instance.clone(),
                week_start,
                statuses: value_u64(item.get("statuses")?)?,
                logins: item.get("logins").and_then(value_u64).unwrap_or(0),
                registrations: item.get("registrations").and_then(value_u64).unwrap_or(0),
            })
        })
        .collect();
    out.sort_by_key(|a| std::cmp::Reverse(a.week_start));
    out.dedup_by_key(|a| a.week_start);
    out.truncate(ACTIVITY_WEEKS);
    Some(out)
}

fn paged(path: &str, limit: usize, cursor: Option<&str>) -> String {
    match cursor {
        Some(c) => format!("{path}?limit={limit}&max_id={}", url::form_urlencoded::byte_serialize(c.as_bytes()).collect::<String>()),
        None => format!("{path}?limit={limit}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    Followers,
    Following,
}

impl LinkKind {
    fn segment(self) -> &'static str {
        match self {
            LinkKind::Followers => "followers",
            LinkKind::Following => "following",
        }
    }
}

impl Client {
    fn get_json(&self, host: &Domain, path: &str) -> Result<(Value, HttpResponse), FetchError> {
        let resp = self.get(host, path)?;
        if resp.status != 200 {
            return Err(status_error(host, path, resp.status));
        }
        Ok((json(host, path, &resp)?, resp))
    }

    /// One page of an account's followers or followees. 401 and 403 mean
    /// the list is hidden and yield an empty final page.
    pub fn fetch_links(
        &self,
        host: &Domain,
        local_id: &str,
        kind: LinkKind,
        limit: usize,
        cursor: Option<&str>,
    ) -> Result<AccountPage, FetchError> {
        let id = url::form_urlencoded::byte_serialize(local_id.as_bytes()).collect::<String>();
        let path = paged(&format!("/api/v1/accounts/{id}/{}", kind.segment()), limit, cursor);
        let resp = self.get(host, &path)?;
        if matches!(resp.status, 401 | 403) {
            log::info!("{host}: links of {local_id} are private");
            return Ok(AccountPage {
                private: true,
                ..AccountPage::default()
            });
        }
        if resp.status != 200 {
            return Err(status_error(host, &path, resp.status));
        }
        let body = json(host, &path, &resp)?;
        let page = parse_account_page(&body, resp.header("Link"), host).ok_or_else(|| FetchError::Malformed {
            host: host.to_string(),
            path: path.clone(),
            message: "expected an array of accounts".into(),
        })?;
        if page.dropped > 0 {
            log::warn!("{host}{path}: dropped {} unparsable accounts", page.dropped);
        }
        Ok(page)
    }

    pub fn fetch_followers(&self, host: &Domain, local_id: &str, limit: usize, cursor: Option<&str>) -> Result<AccountPage, FetchError> {
        self.fetch_links(host, local_id, LinkKind::Followers, limit, cursor)
    }

    pub fn fetch_following(&self, host: &Domain, local_id: &str, limit: usize, cursor: Option<&str>) -> Result<AccountPage, FetchError> {
        self.fetch_links(host, local_id, LinkKind::Following, limit, cursor)
    }

    /// Resolves a username to the id its home server uses.
    pub fn lookup(&self, user: &UserRef) -> Result<Option<String>, FetchError> {
        let acct = url::form_urlencoded::byte_serialize(user.account_id.as_bytes()).collect::<String>();
        let path = format!("/api/v1/accounts/lookup?acct={acct}");
        let resp = self.get(&user.home, &path)?;
        if matches!(resp.status, 404 | 410) {
            return Ok(None);
        }
        if resp.status != 200 {
            return Err(status_error(&user.home, &path, resp.status));
        }
        let body = json(&user.home, &path, &resp)?;
        Ok(parse_account(&body, &user.home).map(|a| a.local_id))
    }

    /// Local accounts listed in the public profile directory.
    pub fn fetch_directory(&self, host: &Domain, limit: usize) -> Result<Vec<Account>, FetchError> {
        let path = format!("/api/v1/directory?local=true&limit={limit}");
        let (body, _) = self.get_json(host, &path)?;
        let page = parse_account_page(&body, None, host).ok_or_else(|| FetchError::Malformed {
            host: host.to_string(),
            path,
            message: "expected an array of accounts".into(),
        })?;
        Ok(page.accounts.into_iter().filter(|a| &a.user.home == host).collect())
    }

    /// Published domain blocks. 401, 403, 404 and 422 mean the list is not
    /// public.
    pub fn fetch_domain_blocks(&self, host: &Domain) -> Result<Published<Vec<BlockEntry>>, FetchError> {
        let path = "/api/v1/instance/domain_blocks";
        let resp = self.get(host, path)?;
        if matches!(resp.status, 401 | 403 | 404 | 410 | 422) {
            return Ok(Published::No);
        }
        if resp.status != 200 {
            return Err(status_error(host, path, resp.status));
        }
        let body = json(host, path, &resp)?;
        parse_domain_blocks(&body).map(Published::Yes).ok_or_else(|| FetchError::Malformed {
            host: host.to_string(),
            path: path.into(),
            message: "expected an array of blocks".into(),
        })
    }

    /// The last twelve weeks of activity, most recent first.
    pub fn fetch_activity(&self, host: &Domain) -> Result<Published<Vec<ActivityRecord>>, FetchError> {
        let path = "/api/v1/instance/activity";
        let resp = self.get(host, path)?;
        if matches!(resp.status, 401 | 403 | 404 | 410 | 422) {
            return Ok(Published::No);
        }
        if resp.status != 200 {
            return Err(status_error(host, path, resp.status));
        }
        let body = json(host, path, &resp)?;
        parse_activity(&body, host).map(Published::Yes).ok_or_else(|| FetchError::Malformed {
            host: host.to_string(),
            path: path.into(),
            message: "expected an array of weeks".into(),
        })
    }

    /// Software name from nodeinfo, `Unknown` when unavailable.
    pub fn fetch_software(&self, host: &Domain) -> Result<Software, FetchError> {
        let index = "/.well-known/nodeinfo";
        let resp = self.get(host, index)?;
        if resp.status != 200 {
            return Ok(Software::Unknown);
        }
        let Ok(body) = json(host, index, &resp) else {
            return Ok(Software::Unknown);
        };
        let href = body
            .get("links")
            .and_then(Value::as_array)
            .and_then(|links| links.iter().rev().find_map(|l| l.get("href").and_then(Value::as_str)));
        let Some(href) = href else {
            return Ok(Software::Unknown);
        };
        let path = match url::Url::parse(href) {
            Ok(u) if u.host_str() == Some(host.as_str()) => match u.query() {
                Some(q) => format!("{}?{q}", u.path()),
                None => u.path().to_string(),
            },
            Ok(_) => return Ok(Software::Unknown),
            Err(_) if href.starts_with('/') => href.to_string(),
            Err(_) => return Ok(Software::Unknown),
        };
        let resp = self.get(host, &path)?;
        if resp.status != 200 {
            return Ok(Software::Unknown);
        }
        Ok(json(host, &path, &resp)
            .ok()
            .and_then(|b| b.pointer("/software/name").and_then(Value::as_str).map(Software::from_name))
            .unwrap_or_default())
    }
}
