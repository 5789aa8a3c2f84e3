//! Zero-shot and few-shot classification with the frozen bi-encoder, using
//! the topic words found by clustering as class names.

use metaprompt::chc::{build_hierarchy, ChcParams};
use metaprompt::clipette::{FrozenEncoders, PromptLayout, PromptState, Sample};
use metaprompt::episodes::{class_vocabulary, generate_corpus, GeneratorSpec};
use metaprompt::gram::adapt_at_test;

fn main() -> metaprompt::Result<()> {
    let spec = GeneratorSpec::default();
    let corpus = generate_corpus(&spec)?;
    let h = build_hierarchy(&corpus, ChcParams::default(), 0)?;
    let model = FrozenEncoders::seeded(corpus.embed_dim(), corpus.encoder_seed, 0.07)?;

    let words: Vec<u32> = h.clusters.iter().map(|c| c.topic_word).collect();
    let vocab = class_vocabulary(&corpus, &words)?;
    let mut shots = Vec::new();
    let mut test = Vec::new();
    for (label, c) in h.clusters.iter().enumerate() {
        for (i, &m) in c.members.iter().enumerate() {
            let s = Sample::new(corpus.pairs[m].image.clone(), label, c.domain_of(m).unwrap_or(0))?;
            if i < 4 {
                shots.push(s)
            } else {
                test.push(s)
            }
        }
    }
    println!(
        "classes: {}",
        h.clusters
            .iter()
            .map(|c| c.topic_label.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    );

    let layout = PromptLayout {
        dim: corpus.embed_dim(),
        n_text: 2,
        n_visual: 2,
    };
    let zero = PromptState::zeros(layout)?;
    println!("zero-shot accuracy: {:.3}", model.accuracy(&zero, &vocab, &test)?);

    let tuned = adapt_at_test(&zero, None, |g, t| model.ce_loss(g, &shots, t, &vocab), 0.5, 20)?;
    println!(
        "after 20 steps on 4 shots per class: {:.3}",
        model.accuracy(&tuned, &vocab, &test)?
    );
    Ok(())
}
