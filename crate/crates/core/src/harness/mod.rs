//! Configuration, persistence, evaluation protocols and the command line.

pub mod cli;
pub mod config;
pub mod io;
pub mod oracle;
pub mod protocols;

pub use cli::cli_dispatch;
pub use config::{AblationFlags, EvalSplit, ExperimentConfig, PromptMode, Variant};
pub use protocols::{
    harmonic_mean, prepare, run_ablation_grid, run_base_to_new, run_cross_domain, EvalReport, Prepared, Protocol,
};
