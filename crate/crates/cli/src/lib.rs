//! Batch harness for wmbench: configs, fixture corpora, deterministic
//! seeding, CSV/SVG emission and the experiment recipes behind the
//! `wmbench` binary.

pub mod config;
pub mod corpus;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod output;
pub mod run;

pub use config::{ExperimentConfig, ExperimentKind};
pub use corpus::{synth_dataset, SynthKind};
pub use error::{CliError, Result};
pub use manifest::{RunManifest, RunStatus};
pub use run::{run, run_file, RunOptions};
