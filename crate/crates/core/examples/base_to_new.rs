//! Base-to-new generalization of the full method, averaged over seeds.
//!
//! Pass a TOML config path to override the defaults.

use metaprompt::harness::io::report_text;
use metaprompt::harness::{run_base_to_new, ExperimentConfig};

fn main() -> metaprompt::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(path.as_ref())?,
        None => ExperimentConfig::default(),
    };
    let report = run_base_to_new(&cfg)?;
    print!("{}", report_text(std::slice::from_ref(&report)));
    Ok(())
}
