//! Append-only snapshot files: one JSON object per line, tagged by a
//! leading `kind` field. Timestamps are RFC 3339.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    ActivityRecord, CrawlSnapshot, Domain, DomainBlockRecord, FollowRecord, InstanceRef, UserRef,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Followers,
    Following,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SnapshotRecord {
    CrawlStart {
        at: DateTime<Utc>,
    },
    Instance(InstanceRef),
    User(UserRef),
    Follow(FollowRecord),
    Block(DomainBlockRecord),
    Activity(ActivityRecord),
    /// One page of a user's links has been written. `next` is the cursor
    /// still to fetch, absent after the last page.
    Page {
        user: UserRef,
        direction: Direction,
        next: Option<String>,
    },
    /// Block list and activity of an instance have been polled.
    InstancePolled {
        domain: Domain,
        blocks_published: bool,
        activity_published: bool,
        at: DateTime<Utc>,
    },
    CrawlEnd {
        at: DateTime<Utc>,
    },
}

impl SnapshotRecord {
    pub fn to_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Single consumer that appends records and flushes after each one.
pub struct SnapshotWriter {
    path: PathBuf,
    out: BufWriter<File>,
    written: usize,
}

impl SnapshotWriter {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self::wrap(path, file))
    }

    /// Opens `path` for appending, creating it when missing.
    pub fn append(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(Self::wrap(path, file))
    }

    fn wrap(path: PathBuf, file: File) -> Self {
        SnapshotWriter {
            path,
            out: BufWriter::new(file),
            written: 0,
        }
    }

    pub fn write(&mut self, record: &SnapshotRecord) -> Result<()> {
        let mut line = record.to_line()?;
        line.push('\n');
        self.out
            .write_all(line.as_bytes())
            .and_then(|_| self.out.flush())
            .map_err(|e| Error::io(&self.path, e))?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> usize {
        self.written
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SnapshotLog {
    pub records: Vec<SnapshotRecord>,
    /// The file ended in a partial line, left by an interrupted write.
    pub truncated_tail: bool,
}

/// Reads every complete record. An unparsable final line without a
/// trailing newline is treated as an interrupted write and dropped; any
/// other bad line is an error.
pub fn read_snapshot(path: impl AsRef<Path>) -> Result<SnapshotLog> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut log = SnapshotLog::default();
    let mut line = String::new();
    let mut lineno = 0;
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        lineno += 1;
        let complete = line.ends_with('\n');
        let body = line.trim_end_matches(['\n', '\r']);
        if body.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<SnapshotRecord>(body) {
            Ok(r) => log.records.push(r),
            Err(_) if !complete => {
                log::warn!("{}: dropping partial final line {lineno}", path.display());
                log.truncated_tail = true;
            }
            Err(e) => {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    line: lineno,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(log)
}

/// Folds records into an in-memory snapshot. Later instance records
/// update earlier ones; repeated follows and activity weeks collapse.
pub fn assemble(records: &[SnapshotRecord]) -> CrawlSnapshot {
    use std::collections::{BTreeMap, HashSet};

    let mut snap = CrawlSnapshot::default();
    let mut follow_seen = HashSet::new();
    let mut activity: BTreeMap<(Domain, DateTime<Utc>), ActivityRecord> = BTreeMap::new();
    let mut first_start: Option<DateTime<Utc>> = None;
    let mut last_end: Option<DateTime<Utc>> = None;
    let mut last_seen: Option<DateTime<Utc>> = None;
    for r in records {
        match r {
            SnapshotRecord::CrawlStart { at } => {
                first_start.get_or_insert(*at);
            }
            SnapshotRecord::CrawlEnd { at } => last_end = Some(*at),
            SnapshotRecord::Instance(i) => {
                snap.instances.insert(i.domain.clone(), i.clone());
            }
            SnapshotRecord::User(u) => {
                snap.users.insert(u.clone());
            }
            SnapshotRecord::Follow(f) => {
                last_seen = Some(last_seen.map_or(f.observed_at, |t| t.max(f.observed_at)));
                if follow_seen.insert((f.follower.clone(), f.followed.clone())) {
                    snap.follows.push(f.clone());
                }
            }
            SnapshotRecord::Block(b) => snap.blocks.push(b.clone()),
            SnapshotRecord::Activity(a) => {
                activity.insert((a.instance.clone(), a.week_start), a.clone());
            }
            SnapshotRecord::Page { .. } | SnapshotRecord::InstancePolled { .. } => {}
        }
    }
    snap.activity = activity.into_values().collect();
    snap.crawl_window = first_start.map(|s| (s, last_end.or(last_seen).unwrap_or(s)));
    snap
}

/// Records that reproduce `snap` when assembled: instances, users,
/// follows, blocks and activity, framed by the crawl window.
pub fn to_records(snap: &CrawlSnapshot) -> Vec<SnapshotRecord> {
    let mut out = Vec::new();
    if let Some((start, _)) = snap.crawl_window {
        out.push(SnapshotRecord::CrawlStart { at: start });
    }
    out.extend(snap.instances.values().cloned().map(SnapshotRecord::Instance));
    out.extend(snap.users.iter().cloned().map(SnapshotRecord::User));
    out.extend(snap.follows.iter().cloned().map(SnapshotRecord::Follow));
    out.extend(snap.blocks.iter().cloned().map(SnapshotRecord::Block));
    out.extend(snap.activity.iter().cloned().map(SnapshotRecord::Activity));
    if let Some((_, end)) = snap.crawl_window {
        out.push(SnapshotRecord::CrawlEnd { at: end });
    }
    out
}

pub fn write_snapshot(path: impl AsRef<Path>, snap: &CrawlSnapshot) -> Result<()> {
    let mut w = SnapshotWriter::create(path)?;
    for r in to_records(snap) {
        w.write(&r)?;
    }
    Ok(())
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<CrawlSnapshot> {
    Ok(assemble(&read_snapshot(path)?.records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn t(secs: i64) -> DateTime<Utc> {
        Utc.timestamp_opt(secs, 0).unwrap()
    }

    fn sample() -> Vec<SnapshotRecord> {
        let a = Domain::parse("a.example").unwrap();
        let b = Domain::parse("b.example").unwrap();
        vec![
            SnapshotRecord::CrawlStart { at: t(0) },
            SnapshotRecord::Instance(InstanceRef {
                domain: a.clone(),
                software: crate::model::Software::Mastodon,
            }),
            SnapshotRecord::User(UserRef::new("alice", a.clone())),
            SnapshotRecord::User(UserRef::new("bob", b.clone())),
            SnapshotRecord::Follow(FollowRecord {
                follower: UserRef::new("alice", a.clone()),
                followed: UserRef::new("bob", b.clone()),
                observed_at: t(10),
            }),
            SnapshotRecord::Block(DomainBlockRecord {
                blocker: a.clone(),
                blocked_domain: Domain::literal("b*d.example"),
                severity: "suspend".into(),
                comment: "spam,\n\"quoted\"\ttab".into(),
                obfuscated: true,
                observed_at: t(11),
            }),
            SnapshotRecord::Activity(ActivityRecord {
                instance: a.clone(),
                week_start: t(604_800),
                statuses: 1234,
                logins: 5,
                registrations: 0,
            }),
            SnapshotRecord::Page {
                user: UserRef::new("alice", a.clone()),
                direction: Direction::Following,
                next: None,
            },
            SnapshotRecord::CrawlEnd { at: t(20) },
        ]
    }

    #[test]
    fn kind_is_the_leading_field() {
        for r in sample() {
            assert!(r.to_line().unwrap().starts_with("{\"kind\":"));
        }
    }

    #[test]
    fn bytes_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.jsonl");
        let mut w = SnapshotWriter::create(&path).unwrap();
        for r in sample() {
            w.write(&r).unwrap();
        }
        drop(w);
        let bytes = std::fs::read(&path).unwrap();
        let log = read_snapshot(&path).unwrap();
        assert_eq!(log.records, sample());
        let mut again = String::new();
        for r in &log.records {
            again.push_str(&r.to_line().unwrap());
            again.push('\n');
        }
        assert_eq!(again.as_bytes(), &bytes[..]);
    }

    #[test]
    fn partial_tail_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.jsonl");
        let mut w = SnapshotWriter::create(&path).unwrap();
        for r in sample().iter().take(3) {
            w.write(r).unwrap();
        }
        drop(w);
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"kind\":\"user\",\"accou").unwrap();
        let log = read_snapshot(&path).unwrap();
        assert!(log.truncated_tail);
        assert_eq!(log.records, sample()[..3].to_vec());
    }

    #[test]
    fn corrupt_middle_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.jsonl");
        std::fs::write(&path, "{\"kind\":\"nope\"}\n{\"kind\":\"crawl_end\",\"at\":\"1970-01-01T00:00:00Z\"}\n").unwrap();
        assert!(matches!(read_snapshot(&path), Err(Error::Format { line: 1, .. })));
    }

    #[test]
    fn records_round_trip_through_assembly() {
        let snap = crate::synthetic::planted_snapshot(&crate::synthetic::PlantedSnapshot::default(), 4);
        let mut again = assemble(&to_records(&snap));
        let mut want = snap.clone();
        // assembly orders activity by (instance, week)
        want.activity.sort_by(|a, b| (&a.instance, a.week_start).cmp(&(&b.instance, b.week_start)));
        again.activity.sort_by(|a, b| (&a.instance, a.week_start).cmp(&(&b.instance, b.week_start)));
        assert_eq!(again, want);
    }

    #[test]
    fn assemble_builds_consistent_snapshot() {
        let snap = assemble(&sample());
        assert_eq!(snap.users.len(), 2);
        assert_eq!(snap.follows.len(), 1);
        assert_eq!(snap.activity[0].statuses, 1234);
        assert_eq!(snap.crawl_window, Some((t(0), t(20))));
        snap.validate().unwrap();
    }
}
