//! Draws few-shot tasks whose support shots come from one visual domain per
//! class while queries span every domain.

use metaprompt::chc::{build_hierarchy, ChcParams};
use metaprompt::episodes::{generate_corpus, task_stream, GeneratorSpec, TaskConfig};

fn main() -> metaprompt::Result<()> {
    let corpus = generate_corpus(&GeneratorSpec::default())?;
    let h = build_hierarchy(&corpus, ChcParams::default(), 0)?;
    let cfg = TaskConfig {
        n_support: 4,
        n_query: 6,
        ..TaskConfig::default()
    };
    for (t, task) in task_stream(&h, cfg, 42, 3).enumerate() {
        let task = task?;
        task.check(&h)?;
        println!("task {t}: classes {:?}", task.labels);
        for c in 0..task.k() {
            let cluster = &h.clusters[task.class_list[c]];
            let domains = |set: &[(usize, usize)]| {
                set.iter()
                    .filter(|s| s.1 == c)
                    .map(|s| cluster.domain_of(s.0).unwrap_or(0))
                    .collect::<Vec<_>>()
            };
            println!(
                "  {:<10} support domains {:?}  query domains {:?}",
                task.labels[c],
                domains(&task.support),
                domains(&task.query)
            );
        }
    }
    Ok(())
}
