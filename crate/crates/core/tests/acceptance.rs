//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! (visible with `--nocapture`) before asserting.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use metaprompt::autodiff::{Graph, NodeId};
use metaprompt::chc::{build_hierarchy, tfidf_scores, truth_purity, ChcParams, Corpus, Pair, CORPUS_VERSION};
use metaprompt::clipette::{log_softmax_rows, normalize_columns, BoundPrompt, PromptLayout, PromptState};
use metaprompt::episodes::{generate_corpus, task_stream, GeneratorSpec, ShiftMode};
use metaprompt::gradcheck::{numeric_gradient, relative_error, Stencil};
use metaprompt::gram::{
    meta_gradients, regulate, taylor_residual, BoundRegulator, Episode, FnObjective, HyperParams, MetaState,
    RegulatorParams,
};
use metaprompt::harness::cli::cli_dispatch;
use metaprompt::harness::config::{ExperimentConfig, Variant};
use metaprompt::harness::oracle::gradcheck_suite;
use metaprompt::harness::protocols::{
    degradation_from_peak, harmonic_mean, prepare, run_protocol, train_all, training_curve, Protocol,
};
use metaprompt::seeding;
use metaprompt::tensor::Tensor;
use metaprompt::Result;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn verdict(id: u32, name: &str, pass: bool, detail: &str) {
    println!("[{id:02}] {} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name}: {detail}");
}

fn uniform(shape: &[usize], lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

type Build = fn(&mut Graph, &[NodeId]) -> Result<NodeId>;

/// One differentiable operation with the input ranges it is checked on.
struct OpCase {
    name: &'static str,
    inputs: Vec<(Vec<usize>, f64, f64)>,
    build: Build,
}

fn op_cases() -> Vec<OpCase> {
    let m = |r: usize, c: usize| vec![r, c];
    let any = |s: Vec<usize>| (s, -1.5, 1.5);
    let pos = |s: Vec<usize>| (s, 0.5, 2.0);
    let case = |name, inputs, build| OpCase { name, inputs, build };
    vec![
        case("matmul", vec![any(m(2, 3)), any(m(3, 4))], |g, x| g.matmul(x[0], x[1])),
        case("transpose", vec![any(m(3, 2))], |g, x| g.transpose(x[0])),
        case("add", vec![any(m(2, 3)), any(m(2, 3))], |g, x| g.add(x[0], x[1])),
        case("sub", vec![any(m(2, 3)), any(m(2, 3))], |g, x| g.sub(x[0], x[1])),
        case("hadamard", vec![any(m(2, 3)), any(m(2, 3))], |g, x| {
            g.hadamard(x[0], x[1])
        }),
        case("div", vec![any(m(2, 3)), pos(m(2, 3))], |g, x| g.div(x[0], x[1])),
        case("scale", vec![any(m(3, 2))], |g, x| g.scale(x[0], -1.7)),
        case("add_scalar", vec![any(m(3, 2))], |g, x| g.add_scalar(x[0], 0.4)),
        case("neg", vec![any(m(2, 2))], |g, x| g.neg(x[0])),
        case("tanh", vec![any(m(2, 3))], |g, x| g.tanh(x[0])),
        case("exp", vec![any(m(2, 3))], |g, x| g.exp(x[0])),
        case("log", vec![pos(m(2, 3))], |g, x| g.log(x[0])),
        case("sqrt", vec![pos(m(2, 3))], |g, x| g.sqrt(x[0])),
        case("sum", vec![any(m(3, 3))], |g, x| g.sum(x[0])),
        case("mean", vec![any(m(3, 3))], |g, x| g.mean(x[0])),
        case("dot", vec![any(m(2, 3)), any(m(2, 3))], |g, x| g.dot(x[0], x[1])),
        case("l2_norm", vec![pos(m(2, 3))], |g, x| g.l2_norm(x[0])),
        case("sum_rows", vec![any(m(3, 4))], |g, x| g.sum_rows(x[0])),
        case("sum_cols", vec![any(m(3, 4))], |g, x| g.sum_cols(x[0])),
        case("replicate_rows", vec![any(m(1, 3))], |g, x| g.replicate_rows(x[0], 4)),
        case("replicate_cols", vec![any(m(3, 1))], |g, x| g.replicate_cols(x[0], 2)),
        case("expand", vec![any(vec![])], |g, x| g.expand(x[0], &[2, 3])),
        case("reshape", vec![any(m(2, 3))], |g, x| g.reshape(x[0], &[3, 2])),
        case("normalize_columns", vec![any(m(4, 3))], |g, x| {
            normalize_columns(g, x[0])
        }),
        case("log_softmax_rows", vec![any(m(3, 4))], |g, x| log_softmax_rows(g, x[0])),
        case(
            "regulate",
            vec![any(m(3, 2)), any(m(3, 3)), any(m(3, 1)), any(m(3, 3)), any(m(3, 1))],
            |g, x| {
                let phi = BoundRegulator {
                    w_gamma: x[1],
                    b_gamma: x[2],
                    w_beta: x[3],
                    b_beta: x[4],
                };
                regulate(g, &phi, x[0])
            },
        ),
    ]
}

/// Value of the scalar probe `Σ R ⊙ op(x)` for fixed weights `R`.
fn probe_value(case: &OpCase, inputs: &[Tensor], weights: &Tensor) -> Result<f64> {
    let mut g = Graph::new();
    let nodes: Vec<NodeId> = inputs.iter().map(|t| g.constant(t.clone())).collect();
    let out = (case.build)(&mut g, &nodes)?;
    let w = g.constant(weights.clone());
    let f = g.dot(out, w)?;
    Ok(g.value(f).item())
}

#[test]
fn a01_op_gradients_and_hessian_symmetry() {
    // Denominator floor for entries whose true derivative is near zero.
    const FLOOR: f64 = 1e-2;
    let started = Instant::now();
    let mut rng = seeding::rng(2024, &[1]);
    let mut cases = 0;
    let mut worst = (0.0f64, "none");
    for case in op_cases() {
        for _ in 0..4 {
            let inputs: Vec<Tensor> = case
                .inputs
                .iter()
                .map(|(s, lo, hi)| uniform(s, *lo, *hi, &mut rng))
                .collect();
            let mut g = Graph::new();
            let nodes: Vec<NodeId> = inputs.iter().map(|t| g.param(t.clone())).collect();
            let out = (case.build)(&mut g, &nodes).unwrap();
            let weights = uniform(g.shape(out), -1.0, 1.0, &mut rng);
            let w = g.constant(weights.clone());
            let f = g.dot(out, w).unwrap();
            let grads = g.grad(f, &nodes, false).unwrap();
            for (k, node) in nodes.iter().enumerate() {
                let numeric = numeric_gradient(
                    |x| {
                        let mut probe = inputs.clone();
                        probe[k] = x.clone();
                        probe_value(&case, &probe, &weights)
                    },
                    &inputs[k],
                    1e-3,
                    Stencil::Central5,
                )
                .unwrap();
                for (a, n) in g.value(grads[*node]).data().iter().zip(numeric.data()) {
                    let e = relative_error(*a, *n, FLOOR);
                    if e > worst.0 {
                        worst = (e, case.name);
                    }
                }
            }
            cases += 1;
        }
    }

    // Hessians of smooth scalar functions built from several ops.
    let mut asym = 0.0f64;
    for seed in 0..10 {
        let mut rng = seeding::rng(seed, &[2]);
        let x0 = uniform(&[4, 1], -1.0, 1.0, &mut rng);
        let a = uniform(&[4, 4], -1.0, 1.0, &mut rng);
        let mut g = Graph::new();
        let x = g.param(x0);
        let ac = g.constant(a);
        let ax = g.matmul(ac, x).unwrap();
        let t = g.tanh(ax).unwrap();
        let half = g.scale(x, 0.5).unwrap();
        let e = g.exp(half).unwrap();
        let te = g.hadamard(t, e).unwrap();
        let s = g.sum(te).unwrap();
        let nx = g.l2_norm(x).unwrap();
        let q = g.dot(x, ax).unwrap();
        let nq = g.hadamard(nx, q).unwrap();
        let f = g.add(s, nq).unwrap();
        let grad = g.grad(f, &[x], true).unwrap()[x];
        let mut h = vec![vec![0.0; 4]; 4];
        for i in 0..4 {
            let mut onehot = vec![0.0; 4];
            onehot[i] = 1.0;
            let o = g.constant(Tensor::column(onehot));
            let gi = g.dot(grad, o).unwrap();
            let row = g.grad(gi, &[x], false).unwrap()[x];
            h[i] = g.value(row).data().to_vec();
        }
        for i in 0..4 {
            for j in 0..4 {
                asym = asym.max((h[i][j] - h[j][i]).abs());
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    let pass = cases >= 100 && worst.0 <= 1e-6 && asym <= 1e-8 && secs < 10.0;
    verdict(
        1,
        "op gradients vs differences, Hessian symmetry",
        pass,
        &format!(
            "{cases} cases, max rel err {:.2e} ({}), max |H - Hᵀ| {asym:.2e}, {secs:.1}s",
            worst.0, worst.1
        ),
    );
}

#[test]
fn a02_meta_gradients_match_differences() {
    let started = Instant::now();
    let mut worst = 0.0f64;
    let mut entries = 0;
    for seed in 0..20 {
        let r = gradcheck_suite(seed).unwrap();
        worst = worst.max(r.max_relative_error());
        entries += r.theta_entries + r.phi_entries;
    }
    let secs = started.elapsed().as_secs_f64();
    verdict(
        2,
        "bi-level gradients vs differences",
        worst <= 1e-4 && secs < 30.0,
        &format!("20 seeds, {entries} entries, max rel err {worst:.2e}, {secs:.1}s"),
    );
}

fn quadratic(m: Tensor, b: Tensor) -> impl Fn(&mut Graph, &BoundPrompt) -> Result<NodeId> {
    move |g, t| {
        let n = m.rows();
        let x = g.reshape(t.node, &[n, 1])?;
        let mc = g.constant(m.clone());
        let bc = g.constant(b.clone());
        let mx = g.matmul(mc, x)?;
        let xmx = g.dot(x, mx)?;
        let half = g.scale(xmx, 0.5)?;
        let lin = g.dot(bc, x)?;
        g.add(half, lin)
    }
}

fn symmetric(n: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let r = uniform(&[n, n], -1.0, 1.0, rng);
    let rt = r.transpose().unwrap();
    let sym = r.matmul(&rt).unwrap();
    sym.axpy(1.0, &Tensor::identity(n)).unwrap().map(|v| v / n as f64)
}

fn matvec(m: &Tensor, v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|i| (0..n).map(|j| m.at(i, j) * v[j]).sum()).collect()
}

#[test]
fn a03_identity_regulator_reduces_to_maml() {
    let (d, cols, n) = (3, 2, 6);
    let layout = PromptLayout {
        dim: d,
        n_text: cols,
        n_visual: 0,
    };
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let mut rng = seeding::rng(seed, &[3]);
        let (a, b) = (symmetric(n, &mut rng), symmetric(n, &mut rng));
        let (ca, cb) = (
            uniform(&[n, 1], -1.0, 1.0, &mut rng),
            uniform(&[n, 1], -1.0, 1.0, &mut rng),
        );
        let theta = PromptState::from_matrix(layout, uniform(&[d, cols], -1.0, 1.0, &mut rng)).unwrap();
        let alpha = rng.random_range(0.05..0.5);
        let hyper = HyperParams {
            alpha,
            inner_steps: 1,
            regulator_enabled: false,
            first_order: false,
            ..HyperParams::default()
        };
        let task = FnObjective {
            support: quadratic(a.clone(), ca.clone()),
            query: quadratic(b.clone(), cb.clone()),
        };
        let got = meta_gradients(&theta, &RegulatorParams::zeros(d), &[task], &hyper).unwrap();

        // (I − α A) ∇L_q(θ − α ∇L_s(θ)) with ∇L(x) = M x + c
        let x = theta.matrix().data().to_vec();
        let gs: Vec<f64> = matvec(&a, &x).iter().zip(ca.data()).map(|(u, c)| u + c).collect();
        let adapted: Vec<f64> = x.iter().zip(&gs).map(|(xi, gi)| xi - alpha * gi).collect();
        let gq: Vec<f64> = matvec(&b, &adapted).iter().zip(cb.data()).map(|(u, c)| u + c).collect();
        let agq = matvec(&a, &gq);
        let expected: Vec<f64> = gq.iter().zip(&agq).map(|(g, ag)| g - alpha * ag).collect();
        for (u, v) in got.theta.data().iter().zip(&expected) {
            worst = worst.max((u - v).abs());
        }
    }
    verdict(
        3,
        "identity-regulator meta-gradient vs closed form",
        worst <= 1e-8,
        &format!("10 quadratics, max abs err {worst:.2e}"),
    );
}

fn micro_corpus(texts: &[Vec<u32>], vocab: usize) -> Corpus {
    Corpus {
        version: CORPUS_VERSION,
        vocabulary: (0..vocab).map(|i| format!("w{i}")).collect(),
        word_vectors: (0..vocab).map(|i| vec![i as f64, 1.0]).collect(),
        pairs: texts
            .iter()
            .map(|t| Pair {
                text: t.clone(),
                image: Tensor::zeros(&[1, 2]),
                truth_topic: None,
                truth_domain: None,
            })
            .collect(),
        encoder_seed: 0,
        signatures: Vec::new(),
    }
}

/// Direct evaluation of `(N_wl / N_l) · ln(L / (L_w + 1))` by counting.
fn brute_force_tfidf(clusters: &[Vec<usize>], texts: &[Vec<u32>], vocab: usize) -> Vec<BTreeMap<u32, f64>> {
    let count = |l: usize, w: u32| -> usize {
        clusters[l]
            .iter()
            .map(|&i| texts[i].iter().filter(|&&t| t == w).count())
            .sum()
    };
    let n_l = |l: usize| -> usize { clusters[l].iter().map(|&i| texts[i].len()).sum() };
    let big_l = clusters.len();
    (0..big_l)
        .map(|l| {
            let mut out = BTreeMap::new();
            for w in 0..vocab as u32 {
                let n_wl = count(l, w);
                if n_wl == 0 {
                    continue;
                }
                let l_w = (0..big_l).filter(|&k| count(k, w) > 0).count();
                out.insert(
                    w,
                    (n_wl as f64 / n_l(l) as f64) * (big_l as f64 / (l_w as f64 + 1.0)).ln(),
                );
            }
            out
        })
        .collect()
}

#[test]
fn a04_tfidf_matches_brute_force() {
    let mut rng = seeding::rng(4, &[4]);
    let mut mismatches = 0;
    for _ in 0..50 {
        let vocab = rng.random_range(2..9);
        let n_clusters = rng.random_range(1..6);
        let mut texts = Vec::new();
        let mut clusters = Vec::new();
        for _ in 0..n_clusters {
            let mut members = Vec::new();
            for _ in 0..rng.random_range(1..5) {
                let len = rng.random_range(1..7);
                members.push(texts.len());
                texts.push(
                    (0..len)
                        .map(|_| rng.random_range(0..vocab as u32))
                        .collect::<Vec<u32>>(),
                );
            }
            clusters.push(members);
        }
        let corpus = micro_corpus(&texts, vocab);
        let got = tfidf_scores(&clusters, &corpus).unwrap();
        if got != brute_force_tfidf(&clusters, &texts, vocab) {
            mismatches += 1;
        }
    }
    // apple = 0, pear = 1, plum = 2
    let texts = vec![vec![0, 0, 1], vec![1, 1], vec![2]];
    let hand = tfidf_scores(&[vec![0], vec![1], vec![2]], &micro_corpus(&texts, 3)).unwrap();
    let expected = (2.0 / 3.0) * (3.0f64 / 2.0).ln();
    let err = (hand[0][&0] - expected).abs();
    verdict(
        4,
        "cluster TF-IDF vs brute force",
        mismatches == 0 && err <= 1e-12,
        &format!(
            "50 micro-corpora, {mismatches} mismatches, hand example {:.6} (err {err:.1e})",
            hand[0][&0]
        ),
    );
}

#[test]
fn a05_planted_topics_and_domains_are_recovered() {
    let started = Instant::now();
    let mut lows = (1.0f64, 1.0f64);
    for seed in 0..5 {
        let spec = GeneratorSpec {
            seed,
            ..GeneratorSpec::default()
        };
        let corpus = generate_corpus(&spec).unwrap();
        let h = build_hierarchy(&corpus, ChcParams::default(), seed).unwrap();
        let (t, d) = truth_purity(&h, &corpus).unwrap();
        lows = (lows.0.min(t), lows.1.min(d));
    }
    let secs = started.elapsed().as_secs_f64();
    verdict(
        5,
        "clustering recovers planted structure",
        lows.0 >= 0.9 && lows.1 >= 0.9 && secs < 20.0,
        &format!(
            "5 seeds, min topic purity {:.3}, min domain purity {:.3}, {secs:.1}s",
            lows.0, lows.1
        ),
    );
}

#[test]
fn a06_sampled_tasks_are_well_formed() {
    let cfg = ExperimentConfig::default();
    let prep = prepare(&cfg).unwrap();
    let h = &prep.hierarchy;
    let mut bad = 0;
    let mut count = 0;
    for task in task_stream(h, cfg.tasks, 6, 1000) {
        let task = task.unwrap();
        count += 1;
        let k = task.class_list.len();
        let labels_ok = task
            .support
            .iter()
            .chain(&task.query)
            .all(|&(pair, c)| c < k && h.clusters[task.class_list[c]].members.contains(&pair));
        let s: BTreeSet<usize> = task.support.iter().map(|p| p.0).collect();
        let q: BTreeSet<usize> = task.query.iter().map(|p| p.0).collect();
        let disjoint = s.is_disjoint(&q) && s.len() == task.support.len() && q.len() == task.query.len();
        let single_domain = (0..k).all(|c| {
            let doms: BTreeSet<Option<usize>> = task
                .support
                .iter()
                .filter(|p| p.1 == c)
                .map(|&(pair, _)| h.clusters[task.class_list[c]].domain_of(pair))
                .collect();
            doms.len() == 1 && task.support_domain[c] == *doms.iter().next().unwrap()
        });
        let distinct: BTreeSet<usize> = task.class_list.iter().copied().collect();
        if !(labels_ok && disjoint && single_domain && distinct.len() == k && task.check(h).is_ok()) {
            bad += 1;
        }
    }
    assert_eq!(cfg.tasks.shift, ShiftMode::DomainShift);
    verdict(
        6,
        "task invariants",
        count == 1000 && bad == 0,
        &format!("{count} tasks, {bad} violations"),
    );
}

#[test]
fn a07_taylor_residual_scales_quadratically() {
    let cfg = ExperimentConfig::default();
    let prep = prepare(&cfg).unwrap();
    let state = MetaState::init(cfg.layout(), &cfg.hyper, 7).unwrap();
    let mut ratios = Vec::new();
    for task in task_stream(&prep.hierarchy, cfg.tasks, 7, 50) {
        let (vocab, support, query) = task.unwrap().materialize(&prep.hierarchy, &prep.corpus).unwrap();
        let ep = Episode {
            model: &prep.model,
            vocab,
            support,
            query,
        };
        let phi = Some(&state.phi);
        let big = taylor_residual(&state.theta, phi, &ep, 1e-2).unwrap();
        let small = taylor_residual(&state.theta, phi, &ep, 5e-3).unwrap();
        ratios.push(big / small);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    verdict(
        7,
        "Taylor residual ratio for halved step",
        (3.5..=4.5).contains(&mean),
        &format!("{} tasks, mean ratio {mean:.3}", ratios.len()),
    );
}

#[test]
fn a08_gradient_alignment_increases() {
    let started = Instant::now();
    let cfg = ExperimentConfig::default();
    let prep = prepare(&cfg).unwrap();
    let states = train_all(&prep, &cfg, Variant::Full, Protocol::BaseToNew).unwrap();
    let mut rising = 0;
    let mut detail = Vec::new();
    for s in &states {
        let s = s.as_ref().expect("training diverged");
        let (first, last) = metaprompt::harness::protocols::quarter_means(&s.trace, |r| r.mean_alignment);
        if last > first {
            rising += 1;
        }
        detail.push(format!("{first:.3}->{last:.3}"));
    }
    let secs = started.elapsed().as_secs_f64();
    verdict(
        8,
        "alignment rises during meta-training",
        rising >= 4 && secs < 120.0,
        &format!(
            "{rising}/{} seeds rising [{}], {secs:.1}s",
            states.len(),
            detail.join(", ")
        ),
    );
}

#[test]
fn a09_regulator_limits_new_class_degradation() {
    let cfg = ExperimentConfig::default();
    let prep = prepare(&cfg).unwrap();
    let t = cfg.hyper.total_tasks;
    let mut mean = BTreeMap::new();
    for v in [Variant::Full, Variant::NoRegulator] {
        let mut total = 0.0;
        for i in 0..cfg.eval.seeds {
            let curve = training_curve(&prep, &cfg, v, i, 4 * t, t / 2).unwrap();
            total += degradation_from_peak(&curve);
        }
        mean.insert(v.name(), total / cfg.eval.seeds as f64);
    }
    let (full, plain) = (mean["full"], mean["no_regulator"]);
    verdict(
        9,
        "extended training degrades no_regulator more",
        plain > full,
        &format!("mean drop from peak: full {full:.4}, no_regulator {plain:.4}"),
    );
}

#[test]
fn a10_ablation_ordering_on_new_classes() {
    let cfg = ExperimentConfig::default();
    let prep = prepare(&cfg).unwrap();
    let accs: Vec<(Variant, f64)> = Variant::GRID
        .iter()
        .map(|&v| {
            (
                v,
                run_protocol(&prep, &cfg, v, Protocol::BaseToNew, None).unwrap().new_acc,
            )
        })
        .collect();
    let full = accs[0].1;
    let pass = accs[1..].iter().all(|(_, a)| full >= *a);
    let detail: Vec<String> = accs.iter().map(|(v, a)| format!("{} {a:.4}", v.name())).collect();
    verdict(10, "full variant leads on new classes", pass, &detail.join(", "));
}

#[test]
fn a11_harmonic_mean_reference_values() {
    let h1 = 100.0 * harmonic_mean(0.7758, 0.7311);
    let h2 = 100.0 * harmonic_mean(0.7253, 0.7234);
    let (s1, s2) = (format!("{h1:.2}"), format!("{h2:.2}"));
    verdict(
        11,
        "harmonic mean reference values",
        s1 == "75.28" && s2 == "72.43" && harmonic_mean(0.0, 0.0) == 0.0,
        &format!("H(77.58, 73.11) = {s1}, H(72.53, 72.34) = {s2}"),
    );
}

fn pipeline(dir: &std::path::Path, config: &std::path::Path) -> Vec<i32> {
    let d = dir.to_str().unwrap();
    let c = config.to_str().unwrap();
    ["gen-data", "cluster", "train", "eval-b2n"]
        .iter()
        .map(|cmd| cli_dispatch(["metaprompt", cmd, "--config", c, "--seed", "11", "--out", d]))
        .collect()
}

#[test]
fn a12_pipeline_reports_are_byte_identical() {
    let root = tempfile::tempdir().unwrap();
    let config = root.path().join("exp.toml");
    let cfg = ExperimentConfig {
        hyper: HyperParams {
            total_tasks: 120,
            ..HyperParams::default()
        },
        ..ExperimentConfig::default()
    };
    std::fs::write(&config, cfg.to_toml()).unwrap();
    let (a, b) = (root.path().join("a"), root.path().join("b"));
    let codes = [pipeline(&a, &config), pipeline(&b, &config)];
    let same = |f: &str| {
        std::fs::read(a.join(f))
            .ok()
            .is_some_and(|x| Some(x) == std::fs::read(b.join(f)).ok())
    };
    let identical = ["report.csv", "report.txt", "corpus.json", "hierarchy.json"]
        .iter()
        .all(|f| same(f));
    verdict(
        12,
        "repeated pipeline runs are byte-identical",
        codes.iter().flatten().all(|&c| c == 0) && identical,
        &format!("exit codes {codes:?}, reports identical: {identical}"),
    );
}
