//! Configuration, experiment drivers and output formats.

pub mod config;
pub mod csv;
pub mod experiments;
pub mod snapshot;

pub use config::{parse_config, parse_config_as, ConfigError, ExperimentConfig, ExperimentKind};
pub use experiments::{
    execute, run, run_blowup, run_compare, run_lemma_check, run_scatter, Execution, GuardSummary,
    HarnessError, Verdict,
};
pub use snapshot::{read_snapshot, read_snapshot_into, write_snapshot, Snapshot, SnapshotError};
