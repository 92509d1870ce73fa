mod common;

use std::collections::BTreeSet;
use std::path::PathBuf;

use common::{d, env, fixture};
use fedipol_core::io::snapshot::{read_snapshot, SnapshotRecord};
use fedipol_core::UserRef;
use fedipol_crawler::{bfs_crawl, CrawlError, CrawlLimits, MockResponse, RateLimit};

fn golden_limits() -> CrawlLimits {
    CrawlLimits {
        page_limit: 1,
        ..CrawlLimits::default()
    }
}

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mock_federation.jsonl")
}

#[test]
fn fixture_topology_is_recovered() {
    let (clock, fed) = fixture();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("snapshot.jsonl");
    let outcome = bfs_crawl(&[d("a.example")], &golden_limits(), env(&clock, &fed), &out, false).unwrap();
    let snap = &outcome.snapshot;
    snap.validate().unwrap();
    assert_eq!(snap.instances.len(), 2);
    assert_eq!(snap.users.len(), 5);
    assert_eq!(snap.follows.len(), 6);
    assert_eq!(snap.blocks.len(), 3);
    assert_eq!(snap.activity.len(), 12);
    let got: BTreeSet<(UserRef, UserRef)> = snap.follows.iter().map(|f| (f.follower.clone(), f.followed.clone())).collect();
    let want: BTreeSet<(UserRef, UserRef)> = fed.follows.iter().cloned().collect();
    assert_eq!(got, want);
    assert!(snap.blocks.iter().any(|b| b.obfuscated && b.comment.is_empty()));
}

#[test]
fn golden_snapshot_is_byte_exact() {
    let (clock, fed) = fixture();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("snapshot.jsonl");
    bfs_crawl(&[d("a.example"), d("b.example")], &golden_limits(), env(&clock, &fed), &out, false).unwrap();
    let got = std::fs::read_to_string(&out).unwrap();
    if std::env::var_os("FEDIPOL_BLESS").is_some() {
        std::fs::write(golden_path(), &got).unwrap();
    }
    let want = std::fs::read_to_string(golden_path()).unwrap();
    assert_eq!(got, want);
}

#[test]
fn concurrency_does_not_change_the_snapshot() {
    let mut files = Vec::new();
    for concurrency in [1, 3, 8] {
        let (clock, fed) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("snapshot.jsonl");
        let limits = CrawlLimits {
            concurrency,
            ..golden_limits()
        };
        bfs_crawl(&[d("a.example"), d("b.example")], &limits, env(&clock, &fed), &out, false).unwrap();
        files.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);
}

#[test]
fn one_user_limit() {
    let (clock, fed) = fixture();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("snapshot.jsonl");
    let limits = CrawlLimits {
        max_users: Some(1),
        ..golden_limits()
    };
    let outcome = bfs_crawl(&[d("a.example")], &limits, env(&clock, &fed), &out, false).unwrap();
    assert_eq!(outcome.snapshot.users.len(), 1);
    assert!(outcome.snapshot.follows.is_empty());
    outcome.snapshot.validate().unwrap();
}

#[test]
fn unreachable_seed_is_fatal() {
    let (clock, fed) = fixture();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("snapshot.jsonl");
    let err = bfs_crawl(&[d("nowhere.example")], &golden_limits(), env(&clock, &fed), &out, false).unwrap_err();
    assert!(matches!(err, CrawlError::NoReachableSeeds));
    assert_eq!(err.to_string(), "no reachable seeds");
}

#[test]
fn unreachable_seed_next_to_a_good_one() {
    let (clock, fed) = fixture();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("snapshot.jsonl");
    let outcome = bfs_crawl(&[d("nowhere.example"), d("a.example")], &golden_limits(), env(&clock, &fed), &out, false).unwrap();
    assert_eq!(outcome.snapshot.users.len(), 5);
    assert!(!outcome.snapshot.instances.contains_key(&d("nowhere.example")));
}

#[test]
fn no_user_is_fetched_twice() {
    let (clock, fed) = fixture();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("snapshot.jsonl");
    bfs_crawl(&[d("a.example"), d("b.example")], &golden_limits(), env(&clock, &fed), &out, false).unwrap();
    let mut seen = BTreeSet::new();
    for r in fed.requests() {
        if r.path.contains("/followers") || r.path.contains("/following") || r.path.contains("/lookup") {
            assert!(seen.insert((r.host.clone(), r.path.clone())), "fetched twice: {}{}", r.host, r.path);
        }
    }
}

#[test]
fn scripted_rate_limiting_respects_the_cap() {
    let (clock, fed) = fixture();
    fed.script(
        "a.example",
        "/api/v1/accounts/",
        vec![MockResponse::too_many(1), MockResponse::too_many(3), MockResponse::too_many(0)],
    );
    fed.script("b.example", "/api/v1/instance/domain_blocks", vec![MockResponse::too_many(2)]);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("snapshot.jsonl");
    let rate: RateLimit = "3/10".parse().unwrap();
    let limits = CrawlLimits {
        rate,
        concurrency: 4,
        ..golden_limits()
    };
    let outcome = bfs_crawl(&[d("a.example"), d("b.example")], &limits, env(&clock, &fed), &out, false).unwrap();
    assert_eq!(outcome.snapshot.follows.len(), 6);
    assert_eq!(outcome.snapshot.blocks.len(), 3);
    let log = fed.requests();
    assert!(log.iter().filter(|r| r.status == Some(429)).count() == 4);
    for host in ["a.example", "b.example"] {
        assert!(fed.max_requests_in_window(host, rate.window) <= rate.requests as usize);
    }
}

#[test]
fn resume_after_interruption() {
    let (clock, fed) = fixture();
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full.jsonl");
    let base = bfs_crawl(&[d("a.example")], &golden_limits(), env(&clock, &fed), &full, false).unwrap();

    // keep everything up to the first finished page, plus half a line
    let text = std::fs::read_to_string(&full).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let cut = lines.iter().position(|l| l.contains("\"kind\":\"page\"")).unwrap() + 1;
    let mut partial: String = lines[..cut].iter().map(|l| format!("{l}\n")).collect();
    partial.push_str(&lines[cut][..lines[cut].len() / 2]);
    let out = dir.path().join("resumed.jsonl");
    std::fs::write(&out, partial).unwrap();

    let (clock2, fed2) = fixture();
    let resumed = bfs_crawl(&[d("a.example")], &golden_limits(), env(&clock2, &fed2), &out, true).unwrap();
    assert!(resumed.stats.resumed);
    assert_eq!(resumed.snapshot.users, base.snapshot.users);
    let pairs = |s: &fedipol_core::CrawlSnapshot| -> BTreeSet<_> { s.follows.iter().map(|f| (f.follower.clone(), f.followed.clone())).collect() };
    assert_eq!(pairs(&resumed.snapshot), pairs(&base.snapshot));
    assert_eq!(resumed.snapshot.blocks.len(), base.snapshot.blocks.len());
    let log = read_snapshot(&out).unwrap();
    assert!(!log.truncated_tail);
    assert_eq!(log.records.iter().filter(|r| matches!(r, SnapshotRecord::CrawlStart { .. })).count(), 2);
    // the first page is not requested again
    assert!(fed2.requests().len() < fed.requests().len());
}

#[test]
fn snapshot_replays_byte_for_byte() {
    let (clock, fed) = fixture();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("snapshot.jsonl");
    bfs_crawl(&[d("a.example")], &golden_limits(), env(&clock, &fed), &out, false).unwrap();
    let bytes = std::fs::read_to_string(&out).unwrap();
    let replay: String = read_snapshot(&out).unwrap().records.iter().map(|r| r.to_line().unwrap() + "\n").collect();
    assert_eq!(replay, bytes);
}
