//! Config-driven scenario runs, file formats and the run manifest.

pub mod config;
pub mod output;
pub mod run;
pub mod snapshot;

pub use config::{
    load_config, parse_config, ScenarioConfig, ScenarioKind, SlitMode, SnapshotPolicy,
};
pub use run::{run_scenario, run_scenario_with_source, RunSummary};
pub use snapshot::{read_snapshot, write_snapshot, write_state, Snapshot};
