//! Evaluation protocols: base-to-new generalization, cross-domain transfer
//! and the ablation grid.
//!
//! Each evaluation seed `s` derives its own stream seed from the experiment
//! seed. That seed fixes the base/new split, the train/test partition of
//! every class, the task stream, the prompt initialization and the test-time
//! shots. Variants compared against each other share all of them.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::Graph;
use crate::chc::{build_hierarchy, Corpus, Hierarchy};
use crate::clipette::{ClassVocabulary, FrozenEncoders, PromptState, Sample};
use crate::episodes::{class_vocabulary, generate_corpus, task_stream, MetaTask, ShiftMode};
use crate::error::{Error, Result};
use crate::gram::{adapt_at_test, meta_train, Episode, HyperParams, MetaState, TraceRecord};
use crate::harness::config::{ExperimentConfig, Variant};
use crate::seeding;

/// `2·b·n / (b + n)`, or zero when both are zero.
pub fn harmonic_mean(base: f64, new: f64) -> f64 {
    if base + new > 0.0 {
        2.0 * base * new / (base + new)
    } else {
        0.0
    }
}

/// Corpus, hierarchy and frozen encoders shared by every run of a config.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub corpus: Corpus,
    pub hierarchy: Hierarchy,
    pub model: FrozenEncoders,
}

impl Prepared {
    pub fn new(cfg: &ExperimentConfig, corpus: Corpus, hierarchy: Hierarchy) -> Result<Self> {
        corpus.validate()?;
        hierarchy.validate()?;
        let model = FrozenEncoders::seeded(corpus.embed_dim(), corpus.encoder_seed, cfg.temperature)?;
        Ok(Self {
            corpus,
            hierarchy,
            model,
        })
    }
}

/// Generates the corpus and clusters it.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let corpus = generate_corpus(&cfg.generator)?;
    let hierarchy = build_hierarchy(&corpus, cfg.chc, cfg.seed)?;
    Prepared::new(cfg, corpus, hierarchy)
}

pub fn eval_seed(cfg: &ExperimentConfig, index: usize) -> u64 {
    seeding::derive(cfg.seed, &[seeding::SPLIT, index as u64])
}

/// Labelled samples scored under one class vocabulary.
#[derive(Clone, Debug)]
pub struct ScoredSet {
    pub name: &'static str,
    pub vocab: ClassVocabulary,
    pub samples: Vec<Sample>,
}

/// Everything one evaluation seed needs: the hierarchy meta-training may
/// see, the test-time shots and the sets to score.
#[derive(Clone, Debug)]
pub struct EvalSet {
    pub train: Hierarchy,
    pub shots: Vec<Sample>,
    pub shot_vocab: ClassVocabulary,
    pub scored: Vec<ScoredSet>,
}

/// Cluster positions with pairwise-distinct topic words, first come first kept.
fn distinct_clusters(h: &Hierarchy) -> Vec<usize> {
    let mut seen = std::collections::BTreeSet::new();
    (0..h.clusters.len())
        .filter(|&p| seen.insert(h.clusters[p].topic_word))
        .collect()
}

fn samples(prep: &Prepared, classes: &[usize], pairs: &[Vec<usize>]) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for (c, (&pos, members)) in classes.iter().zip(pairs).enumerate() {
        let cluster = &prep.hierarchy.clusters[pos];
        for &m in members {
            let dom = cluster.domain_of(m).unwrap_or(0);
            out.push(Sample::new(prep.corpus.pairs[m].image.clone(), c, dom)?);
        }
    }
    Ok(out)
}

fn vocab_of(prep: &Prepared, classes: &[usize]) -> Result<ClassVocabulary> {
    let words: Vec<u32> = classes.iter().map(|&p| prep.hierarchy.clusters[p].topic_word).collect();
    class_vocabulary(&prep.corpus, &words)
}

/// Splits `members` into (train, test) with `test_fraction` of them in test.
fn partition<R: Rng + ?Sized>(members: &[usize], test_fraction: f64, rng: &mut R) -> (Vec<usize>, Vec<usize>) {
    let mut m = members.to_vec();
    m.shuffle(rng);
    let n_test = ((m.len() as f64) * test_fraction).round() as usize;
    let n_test = n_test.clamp(1.min(m.len()), m.len().saturating_sub(1));
    let mut test = m[..n_test].to_vec();
    let mut train = m[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    (train, test)
}

fn pick_shots<R: Rng + ?Sized>(train: &[Vec<usize>], shots: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    train
        .iter()
        .map(|pool| {
            if pool.len() < shots {
                return Err(Error::Config(format!(
                    "a class has {} training pairs, fewer than {shots} shots",
                    pool.len()
                )));
            }
            let mut p = pool.clone();
            p.shuffle(rng);
            p.truncate(shots);
            p.sort_unstable();
            Ok(p)
        })
        .collect()
}

fn restricted(h: &Hierarchy, classes: &[usize], train: &[Vec<usize>]) -> Hierarchy {
    let keep: std::collections::BTreeSet<usize> = train.iter().flatten().copied().collect();
    h.select(classes).restrict(|m| keep.contains(&m))
}

/// Seeded base/new split with per-class train/test partitions.
pub fn base_to_new_split(prep: &Prepared, cfg: &ExperimentConfig, seed: u64) -> Result<EvalSet> {
    let mut usable = distinct_clusters(&prep.hierarchy);
    if usable.len() < 3 {
        return Err(Error::Config(format!(
            "{} distinct topics cannot form two base classes and one new class",
            usable.len()
        )));
    }
    let mut rng = seeding::rng(seed, &[seeding::SPLIT]);
    usable.shuffle(&mut rng);
    let n_base = ((usable.len() as f64) * cfg.eval.base_fraction).round() as usize;
    let n_base = n_base.clamp(2, usable.len() - 1);
    let mut base = usable[..n_base].to_vec();
    let mut new = usable[n_base..].to_vec();
    base.sort_unstable();
    new.sort_unstable();

    let (train, test): (Vec<_>, Vec<_>) = base
        .iter()
        .map(|&p| partition(&prep.hierarchy.clusters[p].members, cfg.eval.test_fraction, &mut rng))
        .unzip();
    let mut shot_rng = seeding::rng(seed, &[seeding::SHOTS]);
    let shots = pick_shots(&train, cfg.eval.shots, &mut shot_rng)?;
    let new_members: Vec<Vec<usize>> = new
        .iter()
        .map(|&p| prep.hierarchy.clusters[p].members.clone())
        .collect();
    let base_vocab = vocab_of(prep, &base)?;
    Ok(EvalSet {
        train: restricted(&prep.hierarchy, &base, &train),
        shots: samples(prep, &base, &shots)?,
        shot_vocab: base_vocab.clone(),
        scored: vec![
            ScoredSet {
                name: "base",
                vocab: base_vocab,
                samples: samples(prep, &base, &test)?,
            },
            ScoredSet {
                name: "new",
                vocab: vocab_of(prep, &new)?,
                samples: samples(prep, &new, &new_members)?,
            },
        ],
    })
}

/// Every class keeps one seeded domain out of training and adaptation.
pub fn cross_domain_split(prep: &Prepared, cfg: &ExperimentConfig, seed: u64) -> Result<EvalSet> {
    if cfg.chc.domains < 2 || cfg.generator.n_domains < 2 {
        return Err(Error::Config(
            "cross-domain evaluation needs at least two domains".into(),
        ));
    }
    let classes = distinct_clusters(&prep.hierarchy);
    if classes.len() < 2 {
        return Err(Error::Config(
            "cross-domain evaluation needs two distinct topics".into(),
        ));
    }
    let mut rng = seeding::rng(seed, &[seeding::SPLIT]);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut held = Vec::new();
    for &p in &classes {
        let c = &prep.hierarchy.clusters[p];
        if c.domains.len() < 2 {
            return Err(Error::Config(format!("cluster {} has a single domain", c.id)));
        }
        let out = rng.random_range(0..c.domains.len());
        let kept: Vec<usize> = c
            .domains
            .iter()
            .enumerate()
            .filter(|(u, _)| *u != out)
            .flat_map(|(_, d)| d.iter().copied())
            .collect();
        let (tr, te) = partition(&kept, cfg.eval.test_fraction, &mut rng);
        train.push(tr);
        test.push(te);
        held.push(c.domains[out].clone());
    }
    let mut shot_rng = seeding::rng(seed, &[seeding::SHOTS]);
    let shots = pick_shots(&train, cfg.eval.shots, &mut shot_rng)?;
    let vocab = vocab_of(prep, &classes)?;
    Ok(EvalSet {
        train: restricted(&prep.hierarchy, &classes, &train),
        shots: samples(prep, &classes, &shots)?,
        shot_vocab: vocab.clone(),
        scored: vec![
            ScoredSet {
                name: "in_domain",
                vocab: vocab.clone(),
                samples: samples(prep, &classes, &test)?,
            },
            ScoredSet {
                name: "held_out",
                vocab,
                samples: samples(prep, &classes, &held)?,
            },
        ],
    })
}

fn episode<'a>(model: &'a FrozenEncoders, train: &Hierarchy, corpus: &Corpus, task: &MetaTask) -> Result<Episode<'a>> {
    let (vocab, support, query) = task.materialize(train, corpus)?;
    Ok(Episode {
        model,
        vocab,
        support,
        query,
    })
}

/// Hyperparameters as a variant sees them.
pub fn variant_hyper(cfg: &ExperimentConfig, variant: Variant, total_tasks: usize) -> HyperParams {
    let mut h = cfg.hyper.clone();
    h.total_tasks = total_tasks;
    if variant == Variant::NoRegulator {
        h.regulator_enabled = false;
    }
    h
}

/// Meta-trains (or pretrains) one variant on `train`, calling `observe`
/// after every batch.
pub fn train_variant(
    prep: &Prepared,
    cfg: &ExperimentConfig,
    variant: Variant,
    train: &Hierarchy,
    seed: u64,
    total_tasks: usize,
    observe: impl FnMut(&MetaState) -> Result<()>,
) -> Result<MetaState> {
    let hyper = variant_hyper(cfg, variant, total_tasks);
    let mut tasks = cfg.tasks;
    tasks.k_way = tasks.k_way.min(crate::episodes::usable_clusters(train));
    if tasks.k_way < 2 {
        return Err(Error::Config("meta-training needs two distinct training topics".into()));
    }
    if variant == Variant::NoDomainShift {
        tasks.shift = ShiftMode::Uniform;
    }
    let state = MetaState::init(cfg.layout(), &hyper, seed)?;
    if variant == Variant::NoMeta {
        return Ok(state);
    }
    let task_seed = seeding::derive(seed, &[seeding::TASK]);
    let mut stream = task_stream(train, tasks, task_seed, total_tasks);
    let model = &prep.model;
    let corpus = &prep.corpus;
    let batch = hyper.meta_batch;
    let batches = std::iter::from_fn(move || {
        let mut out = Vec::with_capacity(batch);
        for _ in 0..batch {
            match stream.next() {
                Some(Ok(t)) => match episode(model, train, corpus, &t) {
                    Ok(e) => out.push(e),
                    Err(e) => return Some(Err(e)),
                },
                Some(Err(e)) => return Some(Err(e)),
                None => break,
            }
        }
        (!out.is_empty()).then_some(Ok(out))
    });
    if variant == Variant::PromptPretrainBaseline {
        pretrain(state, batches, &hyper, observe)
    } else {
        meta_train(state, batches, &hyper, observe)
    }
}

/// Direct classification training of the prompts on every task's support
/// and query samples, with no inner loop and no regulator.
fn pretrain<'a, I>(
    mut state: MetaState,
    batches: I,
    hyper: &HyperParams,
    mut observe: impl FnMut(&MetaState) -> Result<()>,
) -> Result<MetaState>
where
    I: IntoIterator<Item = Result<Vec<Episode<'a>>>>,
{
    let mut seen = 0;
    for batch in batches {
        let batch = batch?;
        let step = state.step;
        let started = std::time::Instant::now();
        let mut acc = crate::tensor::Tensor::zeros(state.theta.matrix().shape());
        let mut loss = 0.0;
        for ep in &batch {
            let all: Vec<Sample> = ep.support.iter().chain(&ep.query).cloned().collect();
            let mut g = Graph::new();
            let t = state.theta.bind(&mut g);
            let l = ep
                .model
                .ce_loss(&mut g, &all, &t, &ep.vocab)
                .map_err(|e| as_divergence(e, step))?;
            loss += g.value(l).item();
            let grad = g.grad(l, &[t.node], false)?[t.node];
            acc = acc.axpy(1.0, g.value(grad))?;
        }
        let theta = state.theta.matrix().axpy(-hyper.lambda1, &acc)?;
        if !theta.is_finite() || !loss.is_finite() {
            return Err(Error::Divergence { step });
        }
        state.theta = PromptState::from_matrix(state.theta.layout(), theta)?;
        state.step += 1;
        seen += batch.len();
        state.trace.push(TraceRecord {
            step,
            tasks_seen: seen,
            mean_query_loss: loss / batch.len() as f64,
            mean_alignment: 0.0,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
        observe(&state)?;
    }
    Ok(state)
}

fn as_divergence(e: Error, step: usize) -> Error {
    match e {
        Error::NumericOverflow { .. } => Error::Divergence { step },
        other => other,
    }
}

/// Adapts the prompts on the shots and scores every set.
pub fn evaluate(
    prep: &Prepared,
    cfg: &ExperimentConfig,
    variant: Variant,
    state: &MetaState,
    set: &EvalSet,
) -> Result<Vec<f64>> {
    let hyper = variant_hyper(cfg, variant, cfg.hyper.total_tasks);
    let phi = (variant.uses_regulator() && hyper.regulator_enabled).then_some(&state.phi);
    let model = &prep.model;
    let adapted = adapt_at_test(
        &state.theta,
        phi,
        |g, t| model.ce_loss(g, &set.shots, t, &set.shot_vocab),
        hyper.test_rate(),
        hyper.test_steps,
    )?;
    set.scored
        .iter()
        .map(|s| model.accuracy(&adapted, &s.vocab, &s.samples))
        .collect()
}

/// Outcome of one evaluation seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub index: usize,
    pub seed: u64,
    /// `None` on success, otherwise why the seed failed.
    pub failure: Option<String>,
    /// Accuracies keyed by scored-set name, in protocol order.
    pub accuracies: Vec<(String, f64)>,
    pub alignment_first_quarter: f64,
    pub alignment_last_quarter: f64,
    pub query_loss_first_quarter: f64,
    pub query_loss_last_quarter: f64,
}

impl SeedResult {
    pub fn accuracy(&self, name: &str) -> Option<f64> {
        self.accuracies.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

/// Mean of the first and last quarter of a trace column.
pub fn quarter_means(trace: &[TraceRecord], f: impl Fn(&TraceRecord) -> f64) -> (f64, f64) {
    if trace.is_empty() {
        return (0.0, 0.0);
    }
    let q = (trace.len() / 4).max(1);
    let mean = |s: &[TraceRecord]| s.iter().map(&f).sum::<f64>() / s.len() as f64;
    (mean(&trace[..q]), mean(&trace[trace.len() - q..]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    BaseToNew,
    CrossDomain,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::BaseToNew => "base_to_new",
            Protocol::CrossDomain => "cross_domain",
        }
    }

    pub fn split(self, prep: &Prepared, cfg: &ExperimentConfig, seed: u64) -> Result<EvalSet> {
        match self {
            Protocol::BaseToNew => base_to_new_split(prep, cfg, seed),
            Protocol::CrossDomain => cross_domain_split(prep, cfg, seed),
        }
    }
}

/// Seed means over successful seeds plus the per-seed breakdown.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: Protocol,
    pub variant: Variant,
    pub mode: String,
    pub base_acc: f64,
    pub new_acc: f64,
    pub harmonic_mean: f64,
    pub in_domain_acc: Option<f64>,
    pub held_out_acc: Option<f64>,
    pub alignment_first_quarter: f64,
    pub alignment_last_quarter: f64,
    pub per_seed: Vec<SeedResult>,
}

impl EvalReport {
    pub fn from_seeds(protocol: Protocol, variant: Variant, cfg: &ExperimentConfig, per_seed: Vec<SeedResult>) -> Self {
        let ok: Vec<&SeedResult> = per_seed.iter().filter(|s| s.failure.is_none()).collect();
        let mean = |f: &dyn Fn(&SeedResult) -> f64| {
            if ok.is_empty() {
                0.0
            } else {
                ok.iter().map(|s| f(s)).sum::<f64>() / ok.len() as f64
            }
        };
        let acc = |name: &'static str| mean(&|s: &SeedResult| s.accuracy(name).unwrap_or(0.0));
        let (base, new, ind, held) = match protocol {
            Protocol::BaseToNew => (acc("base"), acc("new"), None, None),
            Protocol::CrossDomain => (0.0, 0.0, Some(acc("in_domain")), Some(acc("held_out"))),
        };
        let harmonic = match protocol {
            Protocol::BaseToNew => mean(&|s: &SeedResult| {
                harmonic_mean(s.accuracy("base").unwrap_or(0.0), s.accuracy("new").unwrap_or(0.0))
            }),
            Protocol::CrossDomain => 0.0,
        };
        Self {
            protocol,
            variant,
            mode: cfg.mode.name().to_string(),
            base_acc: base,
            new_acc: new,
            harmonic_mean: harmonic,
            in_domain_acc: ind,
            held_out_acc: held,
            alignment_first_quarter: mean(&|s: &SeedResult| s.alignment_first_quarter),
            alignment_last_quarter: mean(&|s: &SeedResult| s.alignment_last_quarter),
            per_seed,
        }
    }
}

/// Trained state per evaluation seed, or the reason training failed.
pub type SeedStates = Vec<std::result::Result<MetaState, String>>;

/// Trains `variant` once per evaluation seed under `protocol`.
pub fn train_all(prep: &Prepared, cfg: &ExperimentConfig, variant: Variant, protocol: Protocol) -> Result<SeedStates> {
    (0..cfg.eval.seeds)
        .map(|i| {
            let seed = eval_seed(cfg, i);
            let set = protocol.split(prep, cfg, seed)?;
            match train_variant(prep, cfg, variant, &set.train, seed, cfg.hyper.total_tasks, |_| Ok(())) {
                Ok(s) => Ok(Ok(s)),
                Err(Error::Divergence { step }) => Ok(Err(format!("diverged at step {step}"))),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Evaluates already trained states (or trains them when `states` is `None`).
pub fn run_protocol(
    prep: &Prepared,
    cfg: &ExperimentConfig,
    variant: Variant,
    protocol: Protocol,
    states: Option<&SeedStates>,
) -> Result<EvalReport> {
    let mut per_seed = Vec::with_capacity(cfg.eval.seeds);
    for i in 0..cfg.eval.seeds {
        let seed = eval_seed(cfg, i);
        let set = protocol.split(prep, cfg, seed)?;
        let trained = match states.and_then(|s| s.get(i)) {
            Some(s) => s.clone(),
            None => match train_variant(prep, cfg, variant, &set.train, seed, cfg.hyper.total_tasks, |_| Ok(())) {
                Ok(s) => Ok(s),
                Err(Error::Divergence { step }) => Err(format!("diverged at step {step}")),
                Err(e) => return Err(e),
            },
        };
        let mut result = SeedResult {
            index: i,
            seed,
            failure: None,
            accuracies: Vec::new(),
            alignment_first_quarter: 0.0,
            alignment_last_quarter: 0.0,
            query_loss_first_quarter: 0.0,
            query_loss_last_quarter: 0.0,
        };
        match trained {
            Ok(state) => {
                let accs = evaluate(prep, cfg, variant, &state, &set)?;
                result.accuracies = set.scored.iter().map(|s| s.name.to_string()).zip(accs).collect();
                (result.alignment_first_quarter, result.alignment_last_quarter) =
                    quarter_means(&state.trace, |r| r.mean_alignment);
                (result.query_loss_first_quarter, result.query_loss_last_quarter) =
                    quarter_means(&state.trace, |r| r.mean_query_loss);
            }
            Err(reason) => result.failure = Some(reason),
        }
        per_seed.push(result);
    }
    Ok(EvalReport::from_seeds(protocol, variant, cfg, per_seed))
}

pub fn run_base_to_new(cfg: &ExperimentConfig) -> Result<EvalReport> {
    let prep = prepare(cfg)?;
    run_protocol(&prep, cfg, cfg.variant(), Protocol::BaseToNew, None)
}

pub fn run_cross_domain(cfg: &ExperimentConfig) -> Result<EvalReport> {
    if cfg.chc.domains < 2 || cfg.generator.n_domains < 2 {
        return Err(Error::Config(
            "cross-domain evaluation needs at least two domains".into(),
        ));
    }
    let prep = prepare(cfg)?;
    run_protocol(&prep, cfg, cfg.variant(), Protocol::CrossDomain, None)
}

/// The four ablation rows under the base-to-new protocol, sharing seeds.
pub fn run_ablation_grid(cfg: &ExperimentConfig) -> Result<Vec<EvalReport>> {
    let prep = prepare(cfg)?;
    Variant::GRID
        .iter()
        .map(|&v| run_protocol(&prep, cfg, v, Protocol::BaseToNew, None))
        .collect()
}

/// Accuracy snapshot taken during training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub tasks_seen: usize,
    pub base_acc: f64,
    pub new_acc: f64,
}

/// Base-to-new accuracies of one seed, evaluated every `every` tasks over
/// `total_tasks` of training.
pub fn training_curve(
    prep: &Prepared,
    cfg: &ExperimentConfig,
    variant: Variant,
    index: usize,
    total_tasks: usize,
    every: usize,
) -> Result<Vec<CurvePoint>> {
    let seed = eval_seed(cfg, index);
    let set = base_to_new_split(prep, cfg, seed)?;
    let mut points = Vec::new();
    let every = every.max(1);
    let mut next = every;
    train_variant(prep, cfg, variant, &set.train, seed, total_tasks, |state| {
        let seen = state.trace.last().map_or(0, |r| r.tasks_seen);
        if seen >= next {
            next += every;
            let accs = evaluate(prep, cfg, variant, state, &set)?;
            points.push(CurvePoint {
                tasks_seen: seen,
                base_acc: accs[0],
                new_acc: accs[1],
            });
        }
        Ok(())
    })?;
    Ok(points)
}

/// Largest drop of new-class accuracy from its running peak to the end.
pub fn degradation_from_peak(curve: &[CurvePoint]) -> f64 {
    let peak = curve.iter().map(|p| p.new_acc).fold(f64::NEG_INFINITY, f64::max);
    match curve.last() {
        Some(last) => peak - last.new_acc,
        None => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_mean_examples() {
        assert!((harmonic_mean(0.7758, 0.7311) - 0.7528).abs() < 5e-5);
        assert!((harmonic_mean(0.4, 0.4) - 0.4).abs() < 1e-15);
        assert_eq!(harmonic_mean(0.0, 0.0), 0.0);
    }

    #[test]
    fn degradation_is_peak_minus_last() {
        let c = |v: &[f64]| -> Vec<CurvePoint> {
            v.iter()
                .enumerate()
                .map(|(i, &n)| CurvePoint {
                    tasks_seen: i,
                    base_acc: 0.0,
                    new_acc: n,
                })
                .collect()
        };
        assert!((degradation_from_peak(&c(&[0.5, 0.8, 0.6])) - 0.2).abs() < 1e-15);
        assert_eq!(degradation_from_peak(&c(&[0.5, 0.6])), 0.0);
    }
}
