//! File formats: CSV edge lists and tables, and line-delimited snapshots.

pub mod snapshot;
pub mod tables;

pub use snapshot::{load_snapshot, read_snapshot, to_records, write_snapshot, Direction, SnapshotLog, SnapshotRecord, SnapshotWriter};
pub use tables::*;
