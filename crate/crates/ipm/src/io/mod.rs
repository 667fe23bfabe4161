//! Configuration text, binary snapshots and report emission.

pub mod config;
pub mod report;
pub mod snapshot;

pub use config::{echo_config, parse_config, FieldSpec, RunConfig};
pub use report::{emit_report, write_manifest};
pub use snapshot::{read_snapshot, read_snapshot_bytes, snapshot_bytes, write_snapshot, Snapshot};
