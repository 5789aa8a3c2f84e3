//! Generates a planted corpus, clusters it into topics and domains, and
//! compares the result with the generator's truth labels.

use metaprompt::chc::{build_hierarchy, truth_purity, ChcParams};
use metaprompt::episodes::{generate_corpus, GeneratorSpec};

fn main() -> metaprompt::Result<()> {
    for seed in 0..5 {
        let spec = GeneratorSpec {
            seed,
            ..GeneratorSpec::default()
        };
        let corpus = generate_corpus(&spec)?;
        let h = build_hierarchy(&corpus, ChcParams::default(), seed)?;
        let (topic, domain) = truth_purity(&h, &corpus).expect("planted corpus");
        println!("seed {seed}: topic purity {topic:.3}, domain purity {domain:.3}");
        for c in &h.clusters {
            println!(
                "  cluster {} '{}' (score {:.3}): {} pairs in {} domains",
                c.id,
                c.topic_label,
                c.topic_score,
                c.members.len(),
                c.domains.len()
            );
        }
    }
    Ok(())
}
