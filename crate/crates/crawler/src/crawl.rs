//! Breadth-first crawl over users, writing an append-only snapshot.
//!
//! Work is split into jobs: polling an instance (software, block list,
//! activity, and the directory for seeds) and fetching one page of a
//! user's followers or followees. Jobs run in waves of up to
//! `concurrency`; results are committed in queue order, so the snapshot
//! depends only on what the servers answered.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fs::OpenOptions;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use fedipol_core::io::snapshot::{assemble, read_snapshot, Direction, SnapshotRecord, SnapshotWriter};
use fedipol_core::{ActivityRecord, CrawlSnapshot, Domain, FollowRecord, InstanceRef, Software, UserRef};
use thiserror::Error;

use crate::api::{Account, AccountPage, BlockEntry, LinkKind, Published};
use crate::client::{Client, ClientConfig, FetchError, Tokens};
use crate::clock::Clock;
use crate::limiter::RateLimit;
use crate::transport::Transport;

#[derive(Debug, Clone, PartialEq)]
pub struct CrawlLimits {
    pub max_users: Option<usize>,
    pub max_instances: Option<usize>,
    pub rate: RateLimit,
    /// Wall-clock budget; no new work is started once it is spent.
    pub budget: Option<Duration>,
    /// Requests in flight at once, across all hosts.
    pub concurrency: usize,
    pub page_limit: usize,
    pub directory_limit: usize,
    /// On resume, poll block lists and activity of every instance again.
    pub repoll_blocks: bool,
    pub max_attempts: u32,
    pub quarantine_after: u32,
    pub backoff: Duration,
}

impl Default for CrawlLimits {
    fn default() -> Self {
        let client = ClientConfig::default();
        CrawlLimits {
            max_users: None,
            max_instances: None,
            rate: client.rate,
            budget: None,
            concurrency: 4,
            page_limit: 80,
            directory_limit: 80,
            repoll_blocks: false,
            max_attempts: client.max_attempts,
            quarantine_after: client.quarantine_after,
            backoff: client.backoff,
        }
    }
}

impl CrawlLimits {
    fn client_config(&self) -> ClientConfig {
        ClientConfig {
            rate: self.rate,
            max_attempts: self.max_attempts.max(1),
            quarantine_after: self.quarantine_after.max(1),
            backoff: self.backoff,
            ..ClientConfig::default()
        }
    }
}

pub struct CrawlEnv {
    pub transport: Arc<dyn Transport>,
    pub clock: Arc<dyn Clock>,
    pub tokens: Tokens,
}

#[derive(Debug, Error)]
pub enum CrawlError {
    #[error("no seed instances given")]
    NoSeeds,
    #[error("no reachable seeds")]
    NoReachableSeeds,
    #[error(transparent)]
    Snapshot(#[from] fedipol_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CrawlStats {
    pub users: usize,
    pub instances: usize,
    pub follows: usize,
    pub blocks: usize,
    pub activity_weeks: usize,
    pub pages: usize,
    pub private_lists: usize,
    /// Accounts without a parsable home instance.
    pub dropped_accounts: usize,
    /// Users or instances turned away by the limits.
    pub rejected_users: usize,
    pub failed_jobs: usize,
    pub quarantined: Vec<String>,
    pub budget_exhausted: bool,
    pub resumed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrawlOutcome {
    pub snapshot: CrawlSnapshot,
    pub stats: CrawlStats,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Job {
    Instance {
        domain: Domain,
        seed: bool,
    },
    Links {
        user: UserRef,
        local_id: Option<String>,
        direction: Direction,
        cursor: Option<String>,
    },
}

enum JobResult {
    Instance {
        domain: Domain,
        seed: bool,
        reachable: bool,
        software: Software,
        directory: Vec<Account>,
        blocks: Published<Vec<BlockEntry>>,
        activity: Published<Vec<ActivityRecord>>,
    },
    Links {
        user: UserRef,
        local_id: Option<String>,
        direction: Direction,
        page: Result<AccountPage, FetchError>,
        private: bool,
    },
}

fn kind_of(direction: Direction) -> LinkKind {
    match direction {
        Direction::Followers => LinkKind::Followers,
        Direction::Following => LinkKind::Following,
    }
}

fn run_job(client: &Client, limits: &CrawlLimits, job: Job) -> JobResult {
    match job {
        Job::Instance { domain, seed } => {
            let note = |e: FetchError| log::warn!("{e}");
            let software = client.fetch_software(&domain).unwrap_or_else(|e| {
                note(e);
                Software::Unknown
            });
            let directory = if seed {
                client.fetch_directory(&domain, limits.directory_limit).unwrap_or_else(|e| {
                    note(e);
                    Vec::new()
                })
            } else {
                Vec::new()
            };
            let blocks = client.fetch_domain_blocks(&domain).unwrap_or_else(|e| {
                note(e);
                Published::No
            });
            let activity = client.fetch_activity(&domain).unwrap_or_else(|e| {
                note(e);
                Published::No
            });
            let reachable = client.answered(&domain);
            JobResult::Instance {
                domain,
                seed,
                reachable,
                software,
                directory,
                blocks,
                activity,
            }
        }
        Job::Links {
            user,
            mut local_id,
            direction,
            cursor,
        } => {
            if local_id.is_none() {
                match client.lookup(&user) {
                    Ok(Some(id)) => local_id = Some(id),
                    Ok(None) => {
                        log::info!("{user}: account not found on its home instance");
                        return JobResult::Links {
                            user,
                            local_id,
                            direction,
                            page: Ok(AccountPage::default()),
                            private: false,
                        };
                    }
                    Err(e) => {
                        return JobResult::Links {
                            user,
                            local_id,
                            direction,
                            page: Err(e),
                            private: false,
                        }
                    }
                }
            }
            let id = local_id.as_deref().expect("resolved above");
            let page = client.fetch_links(&user.home, id, kind_of(direction), limits.page_limit, cursor.as_deref());
            let private = matches!(&page, Ok(p) if p.private);
            JobResult::Links {
                user,
                local_id,
                direction,
                page,
                private,
            }
        }
    }
}

struct State {
    writer: SnapshotWriter,
    limits: CrawlLimits,
    instances: Vec<Domain>,
    instance_set: HashSet<Domain>,
    users: HashSet<UserRef>,
    follows: HashSet<(UserRef, UserRef)>,
    polled: HashSet<Domain>,
    queue: VecDeque<Job>,
    stats: CrawlStats,
    clock: Arc<dyn Clock>,
}

impl State {
    fn write(&mut self, r: SnapshotRecord) -> Result<(), CrawlError> {
        self.writer.write(&r)?;
        Ok(())
    }

    fn admit_instance(&mut self, d: &Domain, seed: bool) -> bool {
        if self.instance_set.contains(d) {
            return true;
        }
        if self.limits.max_instances.is_some_and(|m| self.instances.len() >= m) {
            return false;
        }
        self.instance_set.insert(d.clone());
        self.instances.push(d.clone());
        self.queue.push_back(Job::Instance { domain: d.clone(), seed });
        true
    }

    /// Admits a user seen in a listing. Returns whether the user is part of
    /// the crawl afterwards.
    fn admit_user(&mut self, account: &Account, listed_by: &Domain) -> Result<bool, CrawlError> {
        let user = &account.user;
        if self.users.contains(user) {
            return Ok(true);
        }
        if self.limits.max_users.is_some_and(|m| self.users.len() >= m) || !self.admit_instance(&user.home, false) {
            self.stats.rejected_users += 1;
            return Ok(false);
        }
        self.users.insert(user.clone());
        self.write(SnapshotRecord::User(user.clone()))?;
        let local_id = (&user.home == listed_by).then(|| account.local_id.clone());
        for direction in [Direction::Followers, Direction::Following] {
            self.queue.push_back(Job::Links {
                user: user.clone(),
                local_id: local_id.clone(),
                direction,
                cursor: None,
            });
        }
        Ok(true)
    }

    fn commit(&mut self, result: JobResult) -> Result<(), CrawlError> {
        let now = self.clock.now();
        match result {
            JobResult::Instance {
                domain,
                seed,
                reachable,
                software,
                directory,
                blocks,
                activity,
            } => {
                if seed && !reachable {
                    log::warn!("seed {domain} is unreachable");
                    self.stats.failed_jobs += 1;
                    return Ok(());
                }
                self.write(SnapshotRecord::Instance(InstanceRef {
                    domain: domain.clone(),
                    software,
                }))?;
                let blocks_published = blocks.is_published();
                let activity_published = activity.is_published();
                for b in blocks.unwrap_or_default() {
                    if b.domain == domain {
                        continue;
                    }
                    self.stats.blocks += 1;
                    self.write(SnapshotRecord::Block(b.into_record(&domain, now)))?;
                }
                for a in activity.unwrap_or_default() {
                    self.stats.activity_weeks += 1;
                    self.write(SnapshotRecord::Activity(a))?;
                }
                self.write(SnapshotRecord::InstancePolled {
                    domain: domain.clone(),
                    blocks_published,
                    activity_published,
                    at: now,
                })?;
                self.polled.insert(domain.clone());
                for account in &directory {
                    self.admit_user(account, &domain)?;
                }
            }
            JobResult::Links {
                user,
                local_id,
                direction,
                page,
                private,
            } => {
                let page = match page {
                    Ok(p) => p,
                    Err(e) => {
                        log::warn!("skipping {direction:?} of {user}: {e}");
                        self.stats.failed_jobs += 1;
                        return Ok(());
                    }
                };
                self.stats.pages += 1;
                self.stats.dropped_accounts += page.dropped;
                if private {
                    self.stats.private_lists += 1;
                }
                for account in &page.accounts {
                    let other = &account.user;
                    if other == &user || !self.admit_user(account, &user.home)? {
                        continue;
                    }
                    let pair = match direction {
                        Direction::Followers => (other.clone(), user.clone()),
                        Direction::Following => (user.clone(), other.clone()),
                    };
                    if self.follows.insert(pair.clone()) {
                        self.write(SnapshotRecord::Follow(FollowRecord {
                            follower: pair.0,
                            followed: pair.1,
                            observed_at: now,
                        }))?;
                    }
                }
                self.write(SnapshotRecord::Page {
                    user: user.clone(),
                    direction,
                    next: page.next.clone(),
                })?;
                if let Some(cursor) = page.next {
                    self.queue.push_back(Job::Links {
                        user,
                        local_id,
                        direction,
                        cursor: Some(cursor),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Cuts a partial final line left by an interrupted write, so appended
/// records start on a fresh line.
fn drop_partial_tail(path: &Path) -> Result<(), CrawlError> {
    let io = |source| CrawlError::Io {
        path: path.display().to_string(),
        source,
    };
    let bytes = std::fs::read(path).map_err(io)?;
    if bytes.is_empty() || bytes.ends_with(b"\n") {
        return Ok(());
    }
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let f = OpenOptions::new().write(true).open(path).map_err(io)?;
    f.set_len(keep as u64).map_err(io)
}

/// Rebuilds crawl state from an existing snapshot and queues what is left.
fn resume_state(state: &mut State, records: &[SnapshotRecord], seeds: &[Domain]) {
    let mut user_order: Vec<UserRef> = Vec::new();
    let mut progress: HashMap<(UserRef, Direction), Option<String>> = HashMap::new();
    for r in records {
        match r {
            SnapshotRecord::Instance(i) => {
                if state.instance_set.insert(i.domain.clone()) {
                    state.instances.push(i.domain.clone());
                }
            }
            SnapshotRecord::User(u) => {
                if state.users.insert(u.clone()) {
                    user_order.push(u.clone());
                }
                if state.instance_set.insert(u.home.clone()) {
                    state.instances.push(u.home.clone());
                }
            }
            SnapshotRecord::Follow(f) => {
                state.follows.insert((f.follower.clone(), f.followed.clone()));
            }
            SnapshotRecord::InstancePolled { domain, .. } => {
                state.polled.insert(domain.clone());
            }
            SnapshotRecord::Page { user, direction, next } => {
                progress.insert((user.clone(), *direction), next.clone());
            }
            _ => {}
        }
    }
    let seed_set: HashSet<&Domain> = seeds.iter().collect();
    for d in seeds {
        if state.instance_set.insert(d.clone()) {
            state.instances.push(d.clone());
        }
    }
    for d in state.instances.clone() {
        if state.limits.repoll_blocks || !state.polled.contains(&d) {
            state.queue.push_back(Job::Instance {
                seed: seed_set.contains(&d) && !state.polled.contains(&d),
                domain: d,
            });
        }
    }
    for user in user_order {
        for direction in [Direction::Followers, Direction::Following] {
            let cursor = match progress.get(&(user.clone(), direction)) {
                None => None,
                Some(None) => continue,
                Some(Some(c)) => Some(c.clone()),
            };
            state.queue.push_back(Job::Links {
                user: user.clone(),
                local_id: None,
                direction,
                cursor,
            });
        }
    }
}

/// Crawls outward from `seeds`, appending records to the snapshot at
/// `out`. With `resume`, an existing snapshot is continued: finished pages
/// are not fetched again and admitted users count toward the limits.
pub fn bfs_crawl(
    seeds: &[Domain],
    limits: &CrawlLimits,
    env: CrawlEnv,
    out: impl AsRef<Path>,
    resume: bool,
) -> Result<CrawlOutcome, CrawlError> {
    if seeds.is_empty() {
        return Err(CrawlError::NoSeeds);
    }
    let out = out.as_ref();
    let previous = if resume && out.exists() {
        drop_partial_tail(out)?;
        read_snapshot(out)?.records
    } else {
        Vec::new()
    };
    let writer = if previous.is_empty() {
        SnapshotWriter::create(out)?
    } else {
        SnapshotWriter::append(out)?
    };
    let client = Client::new(env.transport, env.clock.clone(), limits.client_config(), env.tokens);
    let clock = env.clock;
    let started = clock.now();
    let mut state = State {
        writer,
        limits: limits.clone(),
        instances: Vec::new(),
        instance_set: HashSet::new(),
        users: HashSet::new(),
        follows: HashSet::new(),
        polled: HashSet::new(),
        queue: VecDeque::new(),
        stats: CrawlStats {
            resumed: !previous.is_empty(),
            ..CrawlStats::default()
        },
        clock: clock.clone(),
    };
    state.write(SnapshotRecord::CrawlStart { at: started })?;

    let fresh = previous.is_empty();
    if fresh {
        for d in seeds {
            state.admit_instance(d, true);
        }
    } else {
        resume_state(&mut state, &previous, seeds);
    }

    let budget = limits.budget.and_then(|b| chrono::Duration::from_std(b).ok());
    let width = limits.concurrency.max(1);
    let mut first_wave = fresh;
    while !state.queue.is_empty() {
        if budget.is_some_and(|b| clock.now() - started >= b) {
            log::info!("crawl budget spent with {} jobs queued", state.queue.len());
            state.stats.budget_exhausted = true;
            break;
        }
        // jobs for quarantined hosts are dropped without a request
        let mut wave = Vec::with_capacity(width);
        while wave.len() < width {
            let Some(job) = state.queue.pop_front() else { break };
            let host = match &job {
                Job::Instance { domain, .. } => domain,
                Job::Links { user, .. } => &user.home,
            };
            if client.is_quarantined(host.as_str()) {
                state.stats.failed_jobs += 1;
                continue;
            }
            wave.push(job);
            // the seeds finish before anything else so reachability is known
            if first_wave && state.queue.front().is_some_and(|j| !matches!(j, Job::Instance { seed: true, .. })) {
                break;
            }
        }
        let results: Vec<JobResult> = if wave.len() == 1 {
            wave.into_iter().map(|j| run_job(&client, limits, j)).collect()
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = wave
                    .into_iter()
                    .map(|j| {
                        let client = &client;
                        s.spawn(move || run_job(client, limits, j))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("crawl worker panicked")).collect()
            })
        };
        for r in results {
            state.commit(r)?;
        }
        if first_wave && !state.queue.front().is_some_and(|j| matches!(j, Job::Instance { seed: true, .. })) {
            first_wave = false;
            if state.polled.is_empty() {
                return Err(CrawlError::NoReachableSeeds);
            }
        }
    }
    state.write(SnapshotRecord::CrawlEnd { at: clock.now() })?;

    let records = read_snapshot(out)?.records;
    let snapshot = assemble(&records);
    let mut stats = state.stats;
    stats.users = snapshot.users.len();
    stats.instances = snapshot.instances.len();
    stats.follows = snapshot.follows.len();
    stats.quarantined = client.quarantined_hosts();
    Ok(CrawlOutcome { snapshot, stats })
}

/// Groups a snapshot's users by home instance, for summaries.
pub fn users_per_instance(snapshot: &CrawlSnapshot) -> BTreeMap<Domain, usize> {
    let mut out = BTreeMap::new();
    for u in &snapshot.users {
        *out.entry(u.home.clone()).or_insert(0) += 1;
    }
    out
}
