//! Trains on some visual domains of every topic and scores the held-out ones.
//!
//! Pass a TOML config path to override the defaults.

use metaprompt::harness::io::report_text;
use metaprompt::harness::{run_cross_domain, ExperimentConfig};

fn main() -> metaprompt::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(path.as_ref())?,
        None => ExperimentConfig::default(),
    };
    let report = run_cross_domain(&cfg)?;
    print!("{}", report_text(std::slice::from_ref(&report)));
    Ok(())
}
