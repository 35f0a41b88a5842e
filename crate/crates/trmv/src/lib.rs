//! Files, experiments and command-line support around [`trmv_core`].
//!
//! * [`io`]: binary tensor and mask files;
//! * [`dataset`]: generated datasets as directories with a JSON manifest;
//! * [`model`]: the fitted-model container;
//! * [`diagnostics`]: CSV traces of fits;
//! * [`experiment`]: replicated TRMV versus TC-MTOT comparisons and their
//!   reports;
//! * [`config`]: TOML config layering.

pub mod config;
pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod io;
pub mod model;

pub use error::{Error, ExitKind, Result};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport, Method};
pub use trmv_core;
