//! File-based pipeline behind the `rkbs` tool: TOML run configs, CSV datasets,
//! JSON model/report files and CSV plot tables.

pub mod config;
pub mod io;
pub mod pipeline;

pub use config::RunConfig;
pub use io::{read_dataset, write_dataset, CandidateFile, ModelFile, ModelKind, FORMAT_VERSION};
pub use pipeline::{exit_code_for, run, Command, Outcome};
