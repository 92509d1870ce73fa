//! Records shared by the crawler, the graph builders and the reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Lowercase host name of an instance.
///
/// Cloning is cheap: the string is shared. Values built with
/// [`Domain::parse`] are validated host names; [`Domain::literal`] keeps
/// strings such as obfuscated block targets (`*.example`, `ba**.net`) that
/// are not valid host names but still identify a graph node.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Domain(Arc<str>);

impl Domain {
    pub fn parse(raw: &str) -> Result<Self> {
        let lowered = raw.trim().to_lowercase();
        if lowered.is_empty() {
            return Err(Error::InvalidDomain(raw.to_string(), "empty"));
        }
        if lowered.contains("://") {
            return Err(Error::InvalidDomain(raw.to_string(), "contains a scheme"));
        }
        if lowered.contains('/') {
            return Err(Error::InvalidDomain(raw.to_string(), "contains a path"));
        }
        if lowered.split('.').any(str::is_empty) {
            return Err(Error::InvalidDomain(raw.to_string(), "empty label"));
        }
        let ok = lowered
            .chars()
            .all(|c| c.is_alphanumeric() || c == '-' || c == '.' || c == '_');
        if !ok {
            return Err(Error::InvalidDomain(raw.to_string(), "illegal character"));
        }
        if lowered
            .split('.')
            .any(|label| label.starts_with('-') || label.ends_with('-'))
        {
            return Err(Error::InvalidDomain(
                raw.to_string(),
                "label starts or ends with '-'",
            ));
        }
        Ok(Domain(lowered.into()))
    }

    /// Lowercased, trimmed copy of `raw` with no further validation.
    pub fn literal(raw: &str) -> Self {
        Domain(raw.trim().to_lowercase().into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Block lists may mask characters of the target with `*`.
    pub fn is_obfuscated(&self) -> bool {
        self.0.contains('*')
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl AsRef<str> for Domain {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl Serialize for Domain {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Domain {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        Ok(Domain::literal(&raw))
    }
}

/// Server software an instance reports (nodeinfo `software.name`).
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum Software {
    Mastodon,
    Pleroma,
    Other(String),
    #[default]
    Unknown,
}

impl Software {
    pub fn from_name(name: &str) -> Self {
        match name.trim().to_lowercase().as_str() {
            "" | "unknown" => Software::Unknown,
            "mastodon" => Software::Mastodon,
            "pleroma" => Software::Pleroma,
            other => Software::Other(other.to_string()),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Software::Mastodon => "mastodon",
            Software::Pleroma => "pleroma",
            Software::Other(name) => name,
            Software::Unknown => "unknown",
        }
    }
}

impl From<String> for Software {
    fn from(name: String) -> Self {
        Software::from_name(&name)
    }
}

impl From<Software> for String {
    fn from(s: Software) -> Self {
        s.name().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InstanceRef {
    pub domain: Domain,
    #[serde(default)]
    pub software: Software,
}

impl InstanceRef {
    pub fn new(domain: Domain) -> Self {
        InstanceRef {
            domain,
            software: Software::Unknown,
        }
    }
}

/// An account identified by its username on its home instance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UserRef {
    pub account_id: String,
    pub home: Domain,
}

impl UserRef {
    pub fn new(account_id: impl Into<String>, home: Domain) -> Self {
        UserRef {
            account_id: account_id.into(),
            home,
        }
    }

    /// Parses `user@host` (optionally with a leading `@`). A bare `user`
    /// resolves against `local`, the server that served the account.
    pub fn from_acct(acct: &str, local: &Domain) -> Option<Self> {
        let acct = acct.trim().trim_start_matches('@');
        match acct.split_once('@') {
            Some((user, host)) => {
                if user.is_empty() {
                    return None;
                }
                let home = Domain::parse(host).ok()?;
                Some(UserRef::new(user, home))
            }
            None if !acct.is_empty() => Some(UserRef::new(acct, local.clone())),
            None => None,
        }
    }
}

impl fmt::Display for UserRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.account_id, self.home)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FollowRecord {
    pub follower: UserRef,
    pub followed: UserRef,
    pub observed_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainBlockRecord {
    pub blocker: Domain,
    pub blocked_domain: Domain,
    pub severity: String,
    #[serde(default)]
    pub comment: String,
    #[serde(default)]
    pub obfuscated: bool,
    pub observed_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityRecord {
    pub instance: Domain,
    pub week_start: DateTime<Utc>,
    pub statuses: u64,
    pub logins: u64,
    pub registrations: u64,
}

/// Everything a crawl produced, assembled in memory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CrawlSnapshot {
    pub instances: BTreeMap<Domain, InstanceRef>,
    pub users: BTreeSet<UserRef>,
    pub follows: Vec<FollowRecord>,
    pub blocks: Vec<DomainBlockRecord>,
    pub activity: Vec<ActivityRecord>,
    pub crawl_window: Option<(DateTime<Utc>, DateTime<Utc>)>,
}

impl CrawlSnapshot {
    /// Checks the cross-record invariants; returns a description of the
    /// first violation.
    pub fn validate(&self) -> Result<()> {
        for f in &self.follows {
            if f.follower == f.followed {
                return Err(Error::Graph(format!("self follow by {}", f.follower)));
            }
            for u in [&f.follower, &f.followed] {
                if !self.users.contains(u) {
                    return Err(Error::Graph(format!("follow endpoint {u} is not a known user")));
                }
            }
        }
        for b in &self.blocks {
            if !self.instances.contains_key(&b.blocker) {
                return Err(Error::Graph(format!("blocker {} is not a known instance", b.blocker)));
            }
            if b.blocker == b.blocked_domain {
                return Err(Error::Graph(format!("{} blocks itself", b.blocker)));
            }
        }
        let mut weeks = BTreeSet::new();
        for a in &self.activity {
            if !weeks.insert((a.instance.clone(), a.week_start)) {
                return Err(Error::Graph(format!(
                    "duplicate activity week {} for {}",
                    a.week_start, a.instance
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_parse_rules() {
        assert_eq!(Domain::parse("Mastodon.Social").unwrap().as_str(), "mastodon.social");
        assert!(Domain::parse("").is_err());
        assert!(Domain::parse("https://a.example").is_err());
        assert!(Domain::parse("a.example/path").is_err());
        assert!(Domain::parse("a..example").is_err());
        assert!(Domain::parse("a b.example").is_err());
        assert!(Domain::parse("-a.example").is_err());
        assert!(Domain::parse("xn--bcher-kva.example").is_ok());
    }

    #[test]
    fn obfuscated_literal() {
        let d = Domain::literal("Ba**.NET");
        assert_eq!(d.as_str(), "ba**.net");
        assert!(d.is_obfuscated());
        assert!(Domain::parse("ba**.net").is_err());
    }

    #[test]
    fn acct_parsing() {
        let local = Domain::parse("a.example").unwrap();
        let u = UserRef::from_acct("alice", &local).unwrap();
        assert_eq!(u.home, local);
        let u = UserRef::from_acct("@bob@B.Example", &local).unwrap();
        assert_eq!(u.to_string(), "bob@b.example");
        assert!(UserRef::from_acct("carol@not a host", &local).is_none());
        assert!(UserRef::from_acct("x@", &local).is_none());
        assert!(UserRef::from_acct("", &local).is_none());
    }

    #[test]
    fn software_names_round_trip() {
        for name in ["mastodon", "pleroma", "misskey", "unknown"] {
            assert_eq!(Software::from_name(name).name(), name);
        }
        assert_eq!(Software::from_name("Mastodon"), Software::Mastodon);
    }
}
