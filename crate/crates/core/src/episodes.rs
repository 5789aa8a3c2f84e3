//! Planted synthetic corpora and few-shot task construction.
//!
//! The generator plants `L` topics, each with `U` visual domains, and aligns
//! topic prototypes with the frozen encoders so that the topic's main
//! signature word is a sensible class name. Tasks draw `K` topic clusters;
//! in domain-shift mode each class's support shots come from one domain
//! while its query shots come from the whole cluster.

use std::collections::BTreeSet;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::chc::{Corpus, Hierarchy, Pair, CORPUS_VERSION};
use crate::clipette::{ClassVocabulary, FrozenEncoders, Sample, DEFAULT_TEMPERATURE};
use crate::error::{Error, Result};
use crate::seeding;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub n_topics: usize,
    pub n_domains: usize,
    pub pairs_per_topic: usize,
    pub embed_dim: usize,
    pub patches: usize,
    pub vocab_size: usize,
    pub signature_words_per_topic: usize,
    pub common_words: usize,
    pub text_length: usize,
    /// Minimum prototype distance in units of `noise_scale`.
    pub topic_separation: f64,
    /// Norm of each domain offset, in units of `noise_scale`.
    pub domain_offset_scale: f64,
    pub noise_scale: f64,
    /// Probability that a text token is a signature word.
    pub signature_mass: f64,
    /// Norm of an offset shared by every image, relative to the prototype
    /// radius. It separates the image cloud from the text directions.
    pub image_shift: f64,
    /// Weight of a random per-topic direction mixed into each prototype
    /// direction; zero aligns images exactly with their topic's text.
    pub misalignment: f64,
    /// Share in [0, 1] of each domain offset that is common to every topic.
    pub domain_sharing: f64,
    /// Seed of the frozen encoders the prototypes are aligned with.
    pub encoder_seed: u64,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            n_topics: 5,
            n_domains: 3,
            pairs_per_topic: 120,
            embed_dim: 16,
            patches: 4,
            vocab_size: 64,
            signature_words_per_topic: 4,
            common_words: 20,
            text_length: 12,
            topic_separation: 10.0,
            domain_offset_scale: 3.0,
            noise_scale: 0.1,
            signature_mass: 0.7,
            image_shift: 3.0,
            misalignment: 1.0,
            domain_sharing: 0.8,
            encoder_seed: 0,
            seed: 0,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_topics", self.n_topics),
            ("n_domains", self.n_domains),
            ("pairs_per_topic", self.pairs_per_topic),
            ("embed_dim", self.embed_dim),
            ("patches", self.patches),
            ("vocab_size", self.vocab_size),
            ("signature_words_per_topic", self.signature_words_per_topic),
            ("common_words", self.common_words),
            ("text_length", self.text_length),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Spec(format!("{name} must be at least 1")));
        }
        let positive = [
            ("topic_separation", self.topic_separation),
            ("domain_offset_scale", self.domain_offset_scale),
            ("noise_scale", self.noise_scale),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Spec(format!("{name} must be positive, got {v}")));
        }
        if !(self.signature_mass > 0.0 && self.signature_mass <= 1.0) {
            return Err(Error::Spec(format!(
                "signature_mass {} outside (0, 1]",
                self.signature_mass
            )));
        }
        if !(0.0..=1.0).contains(&self.domain_sharing) {
            return Err(Error::Spec(format!(
                "domain_sharing {} outside [0, 1]",
                self.domain_sharing
            )));
        }
        if !(self.misalignment >= 0.0 && self.misalignment.is_finite()) {
            return Err(Error::Spec(format!(
                "misalignment {} must be non-negative",
                self.misalignment
            )));
        }
        if !(self.image_shift >= 0.0 && self.image_shift.is_finite()) {
            return Err(Error::Spec(format!(
                "image_shift {} must be non-negative",
                self.image_shift
            )));
        }
        let needed = self.common_words + self.n_topics * self.signature_words_per_topic;
        if needed > self.vocab_size {
            return Err(Error::Spec(format!(
                "{} common plus {}×{} signature words exceed vocabulary of {}",
                self.common_words, self.n_topics, self.signature_words_per_topic, self.vocab_size
            )));
        }
        if self.n_domains > self.embed_dim {
            return Err(Error::Spec(format!(
                "{} orthogonal domain offsets do not fit in dimension {}",
                self.n_domains, self.embed_dim
            )));
        }
        if self.pairs_per_topic < self.n_domains {
            return Err(Error::Spec("fewer pairs per topic than domains".into()));
        }
        Ok(())
    }

    pub fn signature_word(&self, topic: usize, rank: usize) -> u32 {
        (self.common_words + topic * self.signature_words_per_topic + rank) as u32
    }
}

fn gaussian_vec<R: Rng + ?Sized>(d: usize, std: f64, rng: &mut R) -> Vec<f64> {
    (0..d)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            std * z
        })
        .collect()
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// `count` mutually orthogonal random vectors of the given norm.
fn orthogonal_set<R: Rng + ?Sized>(count: usize, d: usize, norm: f64, rng: &mut R) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(count);
    while basis.len() < count {
        let mut v = gaussian_vec(d, 1.0, rng);
        for b in &basis {
            let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            basis.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    basis
        .into_iter()
        .map(|b| b.into_iter().map(|x| x * norm).collect())
        .collect()
}

/// Ground-truth structure behind a generated corpus.
#[derive(Clone, Debug, PartialEq)]
pub struct Planted {
    pub prototypes: Vec<Vec<f64>>,
    pub domain_offsets: Vec<Vec<Vec<f64>>>,
}

pub fn generate_corpus(spec: &GeneratorSpec) -> Result<Corpus> {
    Ok(generate_with_truth(spec)?.0)
}

/// Generates a corpus together with its planted prototypes and offsets.
pub fn generate_with_truth(spec: &GeneratorSpec) -> Result<(Corpus, Planted)> {
    spec.validate()?;
    let d = spec.embed_dim;
    let s = spec.seed;

    let mut vocabulary: Vec<String> = (0..spec.vocab_size).map(|i| format!("w{i}")).collect();
    for c in 0..spec.common_words {
        vocabulary[c] = format!("common{c}");
    }
    let mut word_rng = seeding::rng(s, &[seeding::WORDS]);
    let mut word_vectors: Vec<Vec<f64>> = (0..spec.vocab_size)
        .map(|_| gaussian_vec(d, 1.0 / (d as f64).sqrt(), &mut word_rng))
        .collect();
    let concepts: Vec<Vec<f64>> = (0..spec.n_topics)
        .map(|_| normalized(gaussian_vec(d, 1.0, &mut word_rng)))
        .collect();
    let mut signatures = Vec::with_capacity(spec.n_topics);
    for (l, concept) in concepts.iter().enumerate() {
        let mut sig = Vec::with_capacity(spec.signature_words_per_topic);
        for r in 0..spec.signature_words_per_topic {
            let w = spec.signature_word(l, r);
            vocabulary[w as usize] = format!("topic{l}_{r}");
            let jitter = gaussian_vec(d, 0.1 / (d as f64).sqrt(), &mut word_rng);
            word_vectors[w as usize] = concept.iter().zip(jitter).map(|(c, j)| c + j).collect();
            sig.push(w);
        }
        signatures.push(sig);
    }

    // Prototypes point, through the frozen maps, at their concept's text direction.
    let encoders = FrozenEncoders::seeded(d, spec.encoder_seed, DEFAULT_TEMPERATURE)?;
    let a_t = encoders.text_map();
    let a_i_t = encoders.image_map().transpose()?;
    let mut tilt_rng = seeding::rng(s, &[seeding::PROTOTYPES, 1]);
    let directions: Vec<Vec<f64>> = concepts
        .iter()
        .map(|c| {
            let t = a_t.matmul(&Tensor::column(c.clone()))?;
            let aligned = normalized(a_i_t.matmul(&t)?.into_data());
            let tilt = normalized(gaussian_vec(d, 1.0, &mut tilt_rng));
            Ok(normalized(
                aligned
                    .iter()
                    .zip(&tilt)
                    .map(|(a, t)| a + spec.misalignment * t)
                    .collect(),
            ))
        })
        .collect::<Result<_>>()?;
    let mut min_gap = f64::INFINITY;
    for a in 0..directions.len() {
        for b in a + 1..directions.len() {
            let gap: f64 = directions[a]
                .iter()
                .zip(&directions[b])
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            min_gap = min_gap.min(gap);
        }
    }
    if min_gap < 1e-9 {
        return Err(Error::Spec("two planted topics share a direction".into()));
    }
    let target = spec.topic_separation * spec.noise_scale;
    let radius = if min_gap.is_finite() { target / min_gap } else { target };
    let mut proto_rng = seeding::rng(s, &[seeding::PROTOTYPES]);
    let shift: Vec<f64> = normalized(gaussian_vec(d, 1.0, &mut proto_rng))
        .into_iter()
        .map(|x| x * spec.image_shift * radius)
        .collect();
    let prototypes: Vec<Vec<f64>> = directions
        .iter()
        .map(|u| u.iter().zip(&shift).map(|(x, c)| radius * x + c).collect())
        .collect();

    let mut dom_rng = seeding::rng(s, &[seeding::DOMAINS]);
    let offset_norm = spec.domain_offset_scale * spec.noise_scale;
    let shared = orthogonal_set(spec.n_domains, d, 1.0, &mut seeding::rng(s, &[seeding::DOMAINS, 1]));
    let rho = spec.domain_sharing;
    let own = (1.0 - rho * rho).sqrt();
    let domain_offsets: Vec<Vec<Vec<f64>>> = (0..spec.n_topics)
        .map(|_| {
            orthogonal_set(spec.n_domains, d, 1.0, &mut dom_rng)
                .into_iter()
                .zip(&shared)
                .map(|(o, g)| {
                    o.iter()
                        .zip(g)
                        .map(|(a, b)| offset_norm * (own * a + rho * b))
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut pair_rng = seeding::rng(s, &[seeding::PAIRS]);
    let n_sig = spec.signature_words_per_topic;
    // Zipf-like weights make the first signature word the most frequent.
    let zipf: Vec<f64> = (0..n_sig).map(|r| 1.0 / (r + 1) as f64).collect();
    let zipf_total: f64 = zipf.iter().sum();
    let mut pairs = Vec::with_capacity(spec.n_topics * spec.pairs_per_topic);
    for l in 0..spec.n_topics {
        for i in 0..spec.pairs_per_topic {
            let u = i % spec.n_domains;
            let text = (0..spec.text_length)
                .map(|_| {
                    if pair_rng.random::<f64>() < spec.signature_mass {
                        let mut x = pair_rng.random::<f64>() * zipf_total;
                        let mut r = 0;
                        while r + 1 < n_sig && x >= zipf[r] {
                            x -= zipf[r];
                            r += 1;
                        }
                        signatures[l][r]
                    } else {
                        pair_rng.random_range(0..spec.common_words) as u32
                    }
                })
                .collect();
            let mut patches = Vec::with_capacity(spec.patches * d);
            for _ in 0..spec.patches {
                let noise = gaussian_vec(d, spec.noise_scale, &mut pair_rng);
                for k in 0..d {
                    patches.push(prototypes[l][k] + domain_offsets[l][u][k] + noise[k]);
                }
            }
            pairs.push(Pair {
                text,
                image: Tensor::matrix(spec.patches, d, patches)?,
                truth_topic: Some(l),
                truth_domain: Some(u),
            });
        }
    }
    let corpus = Corpus {
        version: CORPUS_VERSION,
        vocabulary,
        word_vectors,
        pairs,
        encoder_seed: spec.encoder_seed,
        signatures,
    };
    Ok((
        corpus,
        Planted {
            prototypes,
            domain_offsets,
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftMode {
    /// Support shots of a class come from a single domain.
    DomainShift,
    /// Support shots ignore domains.
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub k_way: usize,
    pub n_support: usize,
    pub n_query: usize,
    pub shift: ShiftMode,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            k_way: 3,
            n_support: 16,
            n_query: 15,
            shift: ShiftMode::DomainShift,
        }
    }
}

/// One few-shot episode. Classes are positions into the hierarchy's cluster
/// list; samples are pair indices into the corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaTask {
    pub class_list: Vec<usize>,
    pub labels: Vec<String>,
    pub class_words: Vec<u32>,
    pub support: Vec<(usize, usize)>,
    pub query: Vec<(usize, usize)>,
    /// Domain used for each class's support shots; `None` in uniform mode.
    pub support_domain: Vec<Option<usize>>,
}

impl MetaTask {
    pub fn k(&self) -> usize {
        self.class_list.len()
    }

    /// Checks the single-support-domain, disjointness and label invariants.
    pub fn check(&self, hierarchy: &Hierarchy) -> Result<()> {
        let k = self.k();
        if self.labels.len() != k || self.class_words.len() != k || self.support_domain.len() != k {
            return Err(Error::Contract("class metadata length mismatch".into()));
        }
        let support: BTreeSet<usize> = self.support.iter().map(|p| p.0).collect();
        if support.len() != self.support.len() {
            return Err(Error::Contract("repeated support pair".into()));
        }
        let query: BTreeSet<usize> = self.query.iter().map(|p| p.0).collect();
        if query.len() != self.query.len() {
            return Err(Error::Contract("repeated query pair".into()));
        }
        if !support.is_disjoint(&query) {
            return Err(Error::Contract("support and query overlap".into()));
        }
        for (set, name) in [(&self.support, "support"), (&self.query, "query")] {
            for c in 0..k {
                if !set.iter().any(|p| p.1 == c) {
                    return Err(Error::Contract(format!("class {c} has no {name} sample")));
                }
            }
            for &(pair, c) in set.iter() {
                let cluster = self
                    .class_list
                    .get(c)
                    .and_then(|&pos| hierarchy.clusters.get(pos))
                    .ok_or_else(|| Error::Contract(format!("{name} label {c} is out of range")))?;
                if cluster.members.binary_search(&pair).is_err() {
                    return Err(Error::Contract(format!("pair {pair} is not in class {c}")));
                }
                if name == "support" {
                    if let Some(dom) = self.support_domain[c] {
                        if cluster.domain_of(pair) != Some(dom) {
                            return Err(Error::Contract(format!(
                                "support pair {pair} of class {c} is outside domain {dom}"
                            )));
                        }
                    }
                }
            }
        }
        let words: BTreeSet<u32> = self.class_words.iter().copied().collect();
        if words.len() != k {
            return Err(Error::Contract("two classes share a topic word".into()));
        }
        Ok(())
    }

    /// Class vocabulary plus support and query samples with class labels and
    /// per-cluster domain tags.
    pub fn materialize(
        &self,
        hierarchy: &Hierarchy,
        corpus: &Corpus,
    ) -> Result<(ClassVocabulary, Vec<Sample>, Vec<Sample>)> {
        let vocab = class_vocabulary(corpus, &self.class_words)?;
        let build = |set: &[(usize, usize)]| -> Result<Vec<Sample>> {
            set.iter()
                .map(|&(pair, c)| {
                    let cluster = &hierarchy.clusters[self.class_list[c]];
                    let dom = cluster.domain_of(pair).unwrap_or(0);
                    Sample::new(corpus.pairs[pair].image.clone(), c, dom)
                })
                .collect()
        };
        Ok((vocab, build(&self.support)?, build(&self.query)?))
    }
}

/// Class vocabulary whose names and embeddings are the given words.
pub fn class_vocabulary(corpus: &Corpus, words: &[u32]) -> Result<ClassVocabulary> {
    ClassVocabulary::new(
        words.iter().map(|&w| corpus.vocabulary[w as usize].clone()).collect(),
        words.iter().map(|&w| corpus.word_vector(w).to_vec()).collect(),
    )
}

/// Number of clusters with pairwise-distinct topic words.
pub fn usable_clusters(hierarchy: &Hierarchy) -> usize {
    hierarchy
        .clusters
        .iter()
        .map(|c| c.topic_word)
        .collect::<BTreeSet<_>>()
        .len()
}

fn pick<R: Rng + ?Sized>(pool: &[usize], n: usize, rng: &mut R) -> Vec<usize> {
    let mut out: Vec<usize> = index::sample(rng, pool.len(), n).into_iter().map(|i| pool[i]).collect();
    out.sort_unstable();
    out
}

/// Draws one task. Class selection, and each class's shots, use separate
/// streams derived from `seed`, so the two shift modes pick the same classes.
pub fn sample_task(hierarchy: &Hierarchy, cfg: &TaskConfig, seed: u64) -> Result<MetaTask> {
    if cfg.k_way == 0 || cfg.n_support == 0 || cfg.n_query == 0 {
        return Err(Error::Config("k_way, n_support and n_query must be at least 1".into()));
    }
    let usable = usable_clusters(hierarchy);
    if cfg.k_way > usable {
        return Err(Error::Config(format!(
            "k_way = {} exceeds the {usable} clusters with distinct topic words",
            cfg.k_way
        )));
    }
    let mut class_rng = seeding::rng(seed, &[seeding::TASK]);
    let mut order: Vec<usize> = (0..hierarchy.clusters.len()).collect();
    order.shuffle(&mut class_rng);
    let mut seen = BTreeSet::new();
    let class_list: Vec<usize> = order
        .into_iter()
        .filter(|&p| seen.insert(hierarchy.clusters[p].topic_word))
        .take(cfg.k_way)
        .collect();

    let mut task = MetaTask {
        class_list: class_list.clone(),
        labels: Vec::new(),
        class_words: Vec::new(),
        support: Vec::new(),
        query: Vec::new(),
        support_domain: Vec::new(),
    };
    for (c, &pos) in class_list.iter().enumerate() {
        let cluster = &hierarchy.clusters[pos];
        let fail = |reason: String| Error::Sampling {
            cluster: cluster.id,
            reason,
        };
        if cluster.members.len() < cfg.n_support + cfg.n_query {
            return Err(fail(format!(
                "{} members cannot supply {} support and {} query samples",
                cluster.members.len(),
                cfg.n_support,
                cfg.n_query
            )));
        }
        let mut rng = seeding::rng(seed, &[seeding::SHOTS, c as u64]);
        let (support, domain) = match cfg.shift {
            ShiftMode::Uniform => (pick(&cluster.members, cfg.n_support, &mut rng), None),
            ShiftMode::DomainShift => {
                let eligible: Vec<usize> = (0..cluster.domains.len())
                    .filter(|&u| cluster.domains[u].len() >= cfg.n_support)
                    .collect();
                let u = match eligible.len() {
                    0 => return Err(fail(format!("no domain holds {} members", cfg.n_support))),
                    1 => eligible[0],
                    n => eligible[rng.random_range(0..n)],
                };
                (pick(&cluster.domains[u], cfg.n_support, &mut rng), Some(u))
            }
        };
        let rest: Vec<usize> = cluster
            .members
            .iter()
            .copied()
            .filter(|m| support.binary_search(m).is_err())
            .collect();
        let query = pick(&rest, cfg.n_query, &mut rng);
        task.labels.push(cluster.topic_label.clone());
        task.class_words.push(cluster.topic_word);
        task.support.extend(support.into_iter().map(|p| (p, c)));
        task.query.extend(query.into_iter().map(|p| (p, c)));
        task.support_domain.push(domain);
    }
    Ok(task)
}

/// Lazily yields `count` tasks; task `t` depends only on `(seed, t)`.
pub fn task_stream<'a>(
    hierarchy: &'a Hierarchy,
    cfg: TaskConfig,
    seed: u64,
    count: usize,
) -> impl Iterator<Item = Result<MetaTask>> + 'a {
    (0..count).map(move |t| sample_task(hierarchy, &cfg, task_seed(seed, t)))
}

pub fn task_seed(seed: u64, t: usize) -> u64 {
    seeding::derive(seed, &[seeding::TASK, t as u64])
}

pub const TASKSET_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSet {
    pub version: u32,
    pub seed: u64,
    pub config: TaskConfig,
    pub tasks: Vec<MetaTask>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chc::{build_hierarchy, ChcParams};

    #[test]
    fn degenerate_spec_has_single_labels() {
        let spec = GeneratorSpec {
            n_topics: 1,
            n_domains: 1,
            pairs_per_topic: 10,
            ..GeneratorSpec::default()
        };
        let c = generate_corpus(&spec).unwrap();
        assert!(c
            .pairs
            .iter()
            .all(|p| p.truth_topic == Some(0) && p.truth_domain == Some(0)));
        c.validate().unwrap();
    }

    #[test]
    fn spec_errors() {
        let bad = GeneratorSpec {
            vocab_size: 10,
            ..GeneratorSpec::default()
        };
        assert!(matches!(generate_corpus(&bad), Err(Error::Spec(_))));
        let bad = GeneratorSpec {
            noise_scale: 0.0,
            ..GeneratorSpec::default()
        };
        assert!(matches!(generate_corpus(&bad), Err(Error::Spec(_))));
        let bad = GeneratorSpec {
            patches: 0,
            ..GeneratorSpec::default()
        };
        assert!(matches!(generate_corpus(&bad), Err(Error::Spec(_))));
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = GeneratorSpec {
            pairs_per_topic: 12,
            ..GeneratorSpec::default()
        };
        assert_eq!(generate_corpus(&spec).unwrap(), generate_corpus(&spec).unwrap());
    }

    #[test]
    fn prototypes_are_separated_and_recoverable() {
        for seed in 0..3 {
            let spec = GeneratorSpec {
                seed,
                ..GeneratorSpec::default()
            };
            let (corpus, truth) = generate_with_truth(&spec).unwrap();
            let p = &truth.prototypes;
            for a in 0..p.len() {
                for b in a + 1..p.len() {
                    let dist: f64 = p[a].iter().zip(&p[b]).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                    assert!(dist >= spec.topic_separation * spec.noise_scale - 1e-9);
                }
            }
            // brute-force nearest-prototype classification of pooled images
            let hits = corpus
                .pairs
                .iter()
                .filter(|pair| {
                    let x = pair.pooled_image();
                    let best = (0..p.len())
                        .min_by(|&a, &b| {
                            let da: f64 = x.iter().zip(&p[a]).map(|(u, v)| (u - v).powi(2)).sum();
                            let db: f64 = x.iter().zip(&p[b]).map(|(u, v)| (u - v).powi(2)).sum();
                            da.partial_cmp(&db).unwrap()
                        })
                        .unwrap();
                    Some(best) == pair.truth_topic
                })
                .count();
            assert!(hits as f64 / corpus.len() as f64 >= 0.99);
        }
    }

    fn default_hierarchy(seed: u64) -> (Corpus, Hierarchy) {
        let corpus = generate_corpus(&GeneratorSpec {
            seed,
            ..GeneratorSpec::default()
        })
        .unwrap();
        let h = build_hierarchy(&corpus, ChcParams::default(), seed).unwrap();
        (corpus, h)
    }

    #[test]
    fn small_task_structure() {
        let (_, h) = default_hierarchy(1);
        let cfg = TaskConfig {
            k_way: 2,
            n_support: 1,
            n_query: 3,
            shift: ShiftMode::DomainShift,
        };
        let t = sample_task(&h, &cfg, 4).unwrap();
        t.check(&h).unwrap();
        assert_eq!(t.support.len(), 2);
        assert!(t.support_domain.iter().all(Option::is_some));
    }

    #[test]
    fn modes_share_class_lists() {
        let (_, h) = default_hierarchy(2);
        let ds = TaskConfig::default();
        let un = TaskConfig {
            shift: ShiftMode::Uniform,
            ..ds
        };
        for s in 0..20 {
            let a = sample_task(&h, &ds, s).unwrap();
            let b = sample_task(&h, &un, s).unwrap();
            assert_eq!(a.class_list, b.class_list);
            b.check(&h).unwrap();
        }
    }

    #[test]
    fn single_domain_modes_coincide() {
        let corpus = generate_corpus(&GeneratorSpec {
            n_domains: 1,
            ..GeneratorSpec::default()
        })
        .unwrap();
        let h = build_hierarchy(
            &corpus,
            ChcParams {
                domains: 1,
                ..ChcParams::default()
            },
            0,
        )
        .unwrap();
        let ds = TaskConfig::default();
        let un = TaskConfig {
            shift: ShiftMode::Uniform,
            ..ds
        };
        for s in 0..10 {
            let a = sample_task(&h, &ds, s).unwrap();
            let b = sample_task(&h, &un, s).unwrap();
            assert_eq!(a.support, b.support);
            assert_eq!(a.query, b.query);
        }
    }

    #[test]
    fn infeasible_counts_name_the_cluster() {
        let (_, h) = default_hierarchy(3);
        let cfg = TaskConfig {
            n_support: 100,
            ..TaskConfig::default()
        };
        assert!(matches!(sample_task(&h, &cfg, 0), Err(Error::Sampling { .. })));
        let cfg = TaskConfig {
            k_way: 9,
            ..TaskConfig::default()
        };
        assert!(matches!(sample_task(&h, &cfg, 0), Err(Error::Config(_))));
    }

    #[test]
    fn stream_is_reproducible() {
        let (_, h) = default_hierarchy(4);
        let a: Vec<MetaTask> = task_stream(&h, TaskConfig::default(), 9, 5)
            .map(Result::unwrap)
            .collect();
        let b: Vec<MetaTask> = task_stream(&h, TaskConfig::default(), 9, 5)
            .map(Result::unwrap)
            .collect();
        assert_eq!(a.len(), 5);
        assert_eq!(a, b);
        assert_eq!(a[3], sample_task(&h, &TaskConfig::default(), task_seed(9, 3)).unwrap());
    }
}
