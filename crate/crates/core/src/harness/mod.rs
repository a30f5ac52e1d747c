//! Run configuration, the six experiments, and run manifests.

mod commands;
mod config;
mod manifest;

pub use commands::{run_experiment, RunOutcome, BATTERY_SLACK, MOLLIFIER_DELTAS};
pub use config::{Experiment, KernelKind, NonlinearityKind, RunConfig};
pub use manifest::{
    verify_manifest, FileEntry, OutputDir, RunManifest, ARTIFACT_VERSION, MANIFEST_NAME,
};
