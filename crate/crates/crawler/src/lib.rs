//! Crawler for Mastodon-compatible servers: follow links, domain blocks
//! and weekly activity, persisted as append-only snapshots.

pub mod api;
pub mod client;
pub mod clock;
pub mod crawl;
pub mod limiter;
pub mod mock;
pub mod seeds;
pub mod transport;

pub use api::{Account, AccountPage, BlockEntry, LinkKind, Published, ACTIVITY_WEEKS};
pub use client::{Client, ClientConfig, FetchError, Tokens};
pub use clock::{Clock, ManualClock, SystemClock};
pub use crawl::{bfs_crawl, CrawlEnv, CrawlError, CrawlLimits, CrawlOutcome, CrawlStats};
pub use limiter::{RateLimit, RateLimiter};
pub use mock::{MockFederation, MockResponse};
pub use seeds::{load_seed_instances, parse_seed_list, SeedList};
pub use transport::{HttpResponse, Request, Transport, TransportError, UreqTransport};
