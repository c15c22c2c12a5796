//! Experiment runner on top of `dampkg-core`: TOML configs, parallel sweeps,
//! CSV / JSON / SVG artifacts and report comparison.

pub mod compare;
pub mod config;
pub mod error;
pub mod io;
pub mod run;
pub mod svg;

pub use config::RunConfig;
pub use error::CliError;
