//! Gradient alignment over training and the accuracy of the first-order
//! expansion of the query loss around the prompts.

use metaprompt::episodes::task_stream;
use metaprompt::gram::{alignment_diag, taylor_residual, Episode};
use metaprompt::harness::protocols::{base_to_new_split, eval_seed, prepare, train_variant};
use metaprompt::harness::{ExperimentConfig, Variant};

fn main() -> metaprompt::Result<()> {
    let cfg = ExperimentConfig::default();
    let prep = prepare(&cfg)?;
    let seed = eval_seed(&cfg, 0);
    let set = base_to_new_split(&prep, &cfg, seed)?;
    let state = train_variant(
        &prep,
        &cfg,
        Variant::Full,
        &set.train,
        seed,
        cfg.hyper.total_tasks,
        |_| Ok(()),
    )?;

    let trace = &state.trace;
    let q = (trace.len() / 4).max(1);
    let mean = |r: &[metaprompt::gram::TraceRecord]| r.iter().map(|t| t.mean_alignment).sum::<f64>() / r.len() as f64;
    println!("alignment, first quarter {:+.4}", mean(&trace[..q]));
    println!("alignment, last quarter  {:+.4}", mean(&trace[trace.len() - q..]));

    let mut tasks = cfg.tasks;
    tasks.k_way = tasks.k_way.min(metaprompt::episodes::usable_clusters(&set.train));
    let probe = task_stream(&set.train, tasks, 7, 5)
        .map(|t| {
            let (vocab, support, query) = t?.materialize(&set.train, &prep.corpus)?;
            Ok(Episode {
                model: &prep.model,
                vocab,
                support,
                query,
            })
        })
        .collect::<metaprompt::Result<Vec<_>>>()?;
    let mut align = 0.0;
    for ep in &probe {
        align += alignment_diag(&state.theta, Some(&state.phi), ep)?.value / probe.len() as f64;
    }
    println!("alignment on {} fresh tasks {align:+.4}", probe.len());
    println!("\n alpha      mean residual   ratio to previous");
    let mut prev: Option<f64> = None;
    for alpha in [1e-1, 5e-2, 2.5e-2, 1.25e-2] {
        let mut r = 0.0;
        for ep in &probe {
            r += taylor_residual(&state.theta, Some(&state.phi), ep, alpha)? / probe.len() as f64;
        }
        match prev {
            Some(p) => println!(" {alpha:<9} {r:.3e}       {:.2}", p / r),
            None => println!(" {alpha:<9} {r:.3e}"),
        }
        prev = Some(r);
    }
    Ok(())
}
