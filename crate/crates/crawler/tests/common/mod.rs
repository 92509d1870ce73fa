#![allow(dead_code)]

use std::sync::Arc;

use fedipol_core::Domain;
use fedipol_crawler::mock::fixture_start;
use fedipol_crawler::{Client, ClientConfig, CrawlEnv, ManualClock, MockFederation, Tokens};

pub fn d(s: &str) -> Domain {
    Domain::parse(s).unwrap()
}

pub fn fixture() -> (Arc<ManualClock>, Arc<MockFederation>) {
    let clock = Arc::new(ManualClock::new(fixture_start()));
    let fed = Arc::new(MockFederation::fixture(clock.clone()));
    (clock, fed)
}

pub fn env(clock: &Arc<ManualClock>, fed: &Arc<MockFederation>) -> CrawlEnv {
    CrawlEnv {
        transport: fed.clone(),
        clock: clock.clone(),
        tokens: Tokens::none(),
    }
}

pub fn client(clock: &Arc<ManualClock>, fed: &Arc<MockFederation>, config: ClientConfig) -> Client {
    Client::new(fed.clone(), clock.clone(), config, Tokens::none())
}
