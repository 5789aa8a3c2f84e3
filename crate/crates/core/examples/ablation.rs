//! Compares the full method with its ablations on base-to-new accuracy.
//!
//! Pass a TOML config path to override the defaults.

use metaprompt::harness::io::report_text;
use metaprompt::harness::{run_ablation_grid, ExperimentConfig};

fn main() -> metaprompt::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(path.as_ref())?,
        None => ExperimentConfig::default(),
    };
    let reports = run_ablation_grid(&cfg)?;
    print!("{}", report_text(&reports));
    Ok(())
}
