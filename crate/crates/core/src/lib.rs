//! Signed instance networks for federated social media.
//!
//! The crate lifts crawled follow and block records to instance graphs,
//! extracts the disparity backbone of the positive graph, merges both into
//! a signed graph, detects k polarized groups with a spectral procedure,
//! and characterizes the groups.

pub mod backbone;
pub mod error;
pub mod io;
pub mod matrix;
pub mod model;
pub mod polarize;
pub mod report;
pub mod seed;
pub mod signed;
pub mod synthetic;

pub use error::{Error, Result};
pub use model::{
    ActivityRecord, CrawlSnapshot, Domain, DomainBlockRecord, FollowRecord, InstanceRef, Software,
    UserRef,
};
pub use signed::{
    build_negative_graph, build_positive_graph, merge_signed, symmetrize, AmbiguityPolicy,
    NegativeGraph, PositiveGraph, Sign, SignedGraph, WeightMode,
};
