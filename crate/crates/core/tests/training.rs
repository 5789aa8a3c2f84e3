//! Training behaviour on the default planted benchmark and on random tasks.

use metaprompt::autodiff::Graph;
use metaprompt::clipette::PromptState;
use metaprompt::episodes::task_stream;
use metaprompt::gram::{adapt_at_test, inner_adapt, meta_gradients, Episode, HyperParams, MetaState, RegulatorParams};
use metaprompt::harness::oracle::tiny_instance;
use metaprompt::harness::protocols::{base_to_new_split, eval_seed, prepare, train_variant, Prepared};
use metaprompt::harness::{ExperimentConfig, Variant};

fn episodes<'a>(prep: &'a Prepared, cfg: &ExperimentConfig, seed: u64, n: usize) -> Vec<Episode<'a>> {
    task_stream(&prep.hierarchy, cfg.tasks, seed, n)
        .map(|t| {
            let (vocab, support, query) = t.unwrap().materialize(&prep.hierarchy, &prep.corpus).unwrap();
            Episode {
                model: &prep.model,
                vocab,
                support,
                query,
            }
        })
        .collect()
}

#[test]
fn two_small_regulated_steps_descend() {
    let cfg = ExperimentConfig::default();
    let prep = prepare(&cfg).unwrap();
    let phi = RegulatorParams::pass_through(cfg.generator.embed_dim, 0.99).unwrap();
    let mut descended = 0;
    let trials = 200;
    for (i, ep) in episodes(&prep, &cfg, 11, trials).iter().enumerate() {
        let init = MetaState::init(cfg.layout(), &cfg.hyper, i as u64).unwrap();
        let loss = |t: &PromptState| ep.model.loss_value(t, &ep.vocab, &ep.support).unwrap();
        let mut losses = vec![loss(&init.theta)];
        let mut theta = init.theta.clone();
        for _ in 0..2 {
            let mut g = Graph::new();
            let t = theta.bind(&mut g);
            let p = phi.bind_constant(&mut g);
            let out = inner_adapt(
                &mut g,
                t,
                Some(&p),
                |g, t| ep.model.ce_loss(g, &ep.support, t, &ep.vocab),
                0.01,
                1,
                false,
            )
            .unwrap();
            theta = PromptState::from_matrix(theta.layout(), g.value(out.node).clone()).unwrap();
            losses.push(loss(&theta));
        }
        if losses[1] < losses[0] && losses[2] < losses[1] {
            descended += 1;
        }
    }
    assert!(descended as f64 >= 0.95 * trials as f64, "{descended}/{trials}");
}

#[test]
fn meta_training_lowers_the_query_loss() {
    let cfg = ExperimentConfig::default();
    let prep = prepare(&cfg).unwrap();
    for index in 0..5 {
        let seed = eval_seed(&cfg, index);
        let set = base_to_new_split(&prep, &cfg, seed).unwrap();
        let state = train_variant(
            &prep,
            &cfg,
            Variant::Full,
            &set.train,
            seed,
            cfg.hyper.total_tasks,
            |_| Ok(()),
        )
        .unwrap();
        let trace = &state.trace;
        assert_eq!(trace.len(), cfg.hyper.total_tasks / cfg.hyper.meta_batch);
        let window = 50.min(trace.len() / 2);
        let mean =
            |r: &[metaprompt::gram::TraceRecord]| r.iter().map(|t| t.mean_query_loss).sum::<f64>() / r.len() as f64;
        let (first, last) = (mean(&trace[..window]), mean(&trace[trace.len() - window..]));
        assert!(last < first, "seed {index}: first {first:.4}, last {last:.4}");
    }
}

#[test]
fn test_time_adaptation_helps_base_classes() {
    let cfg = ExperimentConfig::default();
    let prep = prepare(&cfg).unwrap();
    let (mut before, mut after) = (0.0, 0.0);
    for index in 0..5 {
        let seed = eval_seed(&cfg, index);
        let set = base_to_new_split(&prep, &cfg, seed).unwrap();
        let state = train_variant(
            &prep,
            &cfg,
            Variant::Full,
            &set.train,
            seed,
            cfg.hyper.total_tasks,
            |_| Ok(()),
        )
        .unwrap();
        let base = &set.scored[0];
        assert_eq!(base.name, "base");
        let adapted = adapt_at_test(
            &state.theta,
            Some(&state.phi),
            |g, t| prep.model.ce_loss(g, &set.shots, t, &set.shot_vocab),
            cfg.hyper.test_rate(),
            cfg.hyper.test_steps.max(1),
        )
        .unwrap();
        before += prep.model.accuracy(&state.theta, &base.vocab, &base.samples).unwrap() / 5.0;
        after += prep.model.accuracy(&adapted, &base.vocab, &base.samples).unwrap() / 5.0;
    }
    assert!(after > before, "unadapted {before:.4}, adapted {after:.4}");
}

#[test]
fn training_is_deterministic_and_empty_streams_are_identity() {
    let cfg = ExperimentConfig {
        hyper: HyperParams {
            total_tasks: 40,
            ..HyperParams::default()
        },
        ..ExperimentConfig::default()
    };
    let prep = prepare(&cfg).unwrap();
    let seed = eval_seed(&cfg, 0);
    let set = base_to_new_split(&prep, &cfg, seed).unwrap();
    let run = || train_variant(&prep, &cfg, Variant::Full, &set.train, seed, 40, |_| Ok(())).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.theta, b.theta);
    assert_eq!(a.phi, b.phi);

    let empty = train_variant(&prep, &cfg, Variant::Full, &set.train, seed, 0, |_| Ok(())).unwrap();
    assert!(empty.trace.is_empty());
    assert_eq!(
        empty.theta,
        MetaState::init(cfg.layout(), &cfg.hyper, seed).unwrap().theta
    );
}

#[test]
fn first_order_gradients_approach_exact_ones_for_small_steps() {
    for seed in 0..10 {
        let inst = tiny_instance(seed, 2).unwrap();
        let tasks: Vec<Episode> = inst.tasks.iter().map(|t| t.episode(&inst.model)).collect();
        let exact = HyperParams {
            alpha: 1e-4,
            ..inst.hyper.clone()
        };
        let approx = HyperParams {
            first_order: true,
            ..exact.clone()
        };
        let ge = meta_gradients(&inst.theta, &inst.phi, &tasks, &exact).unwrap().theta;
        let ga = meta_gradients(&inst.theta, &inst.phi, &tasks, &approx).unwrap().theta;
        let diff = ge.axpy(-1.0, &ga).unwrap().norm();
        assert!(diff <= 1e-2 * ge.norm(), "seed {seed}: {diff:e} vs {:e}", ge.norm());
    }
}

#[test]
fn zero_regulator_freezes_test_time_adaptation() {
    let cfg = ExperimentConfig::default();
    let prep = prepare(&cfg).unwrap();
    let ep = &episodes(&prep, &cfg, 3, 1)[0];
    let init = MetaState::init(cfg.layout(), &cfg.hyper, 5).unwrap();
    let zero = RegulatorParams::zeros(cfg.generator.embed_dim);
    let out = adapt_at_test(
        &init.theta,
        Some(&zero),
        |g, t| ep.model.ce_loss(g, &ep.support, t, &ep.vocab),
        0.5,
        3,
    )
    .unwrap();
    assert_eq!(out, init.theta);
}
