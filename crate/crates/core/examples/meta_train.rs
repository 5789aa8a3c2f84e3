//! Meta-trains prompts and the gradient regulator on the base topics of one
//! split, then adapts on few shots and scores base and new classes.
//!
//! Pass a TOML config path to override the defaults.

use metaprompt::harness::protocols::{base_to_new_split, eval_seed, evaluate, prepare, train_variant};
use metaprompt::harness::{ExperimentConfig, Variant};

fn main() -> metaprompt::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(path.as_ref())?,
        None => ExperimentConfig::default(),
    };
    let prep = prepare(&cfg)?;
    let seed = eval_seed(&cfg, 0);
    let set = base_to_new_split(&prep, &cfg, seed)?;

    let untrained = train_variant(&prep, &cfg, Variant::NoMeta, &set.train, seed, 0, |_| Ok(()))?;
    let before = evaluate(&prep, &cfg, Variant::NoMeta, &untrained, &set)?;
    println!("before meta-training: base {:.3}, new {:.3}", before[0], before[1]);

    let every = (cfg.hyper.total_tasks / cfg.hyper.meta_batch / 10).max(1);
    let state = train_variant(
        &prep,
        &cfg,
        Variant::Full,
        &set.train,
        seed,
        cfg.hyper.total_tasks,
        |s| {
            let r = s.trace.last().expect("one record per batch");
            if r.step % every == 0 {
                println!(
                    "step {:>4}  tasks {:>4}  query loss {:.4}  alignment {:+.4}",
                    r.step, r.tasks_seen, r.mean_query_loss, r.mean_alignment
                );
            }
            Ok(())
        },
    )?;
    let after = evaluate(&prep, &cfg, Variant::Full, &state, &set)?;
    println!("after meta-training:  base {:.3}, new {:.3}", after[0], after[1]);
    Ok(())
}
