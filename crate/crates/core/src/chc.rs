//! Cross-modal hierarchical clustering.
//!
//! Pairs are first grouped into semantic topics from their text (sentence
//! embedding, principal-component reduction, k-means), each topic is labelled
//! with the word of highest cluster-wise TF-IDF, and finally every topic is
//! split into visual domains by k-means over pooled image patches.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding;
use crate::tensor::Tensor;

pub const HIERARCHY_VERSION: u32 = 1;
pub const KMEANS_MAX_ITER: usize = 100;
/// Independent k-means++ restarts; the lowest final objective wins.
pub const KMEANS_RESTARTS: usize = 10;

/// One image-text pair. `image` is a `P × d` patch matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub text: Vec<u32>,
    pub image: Tensor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_topic: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_domain: Option<usize>,
}

impl Pair {
    pub fn pooled_image(&self) -> Vec<f64> {
        let p = self.image.rows() as f64;
        self.image
            .sum_cols()
            .expect("patch matrix")
            .data()
            .iter()
            .map(|v| v / p)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub version: u32,
    /// Word id to surface string.
    pub vocabulary: Vec<String>,
    /// The fixed word-embedding table, one row per word id.
    pub word_vectors: Vec<Vec<f64>>,
    pub pairs: Vec<Pair>,
    /// Seed of the frozen bi-encoder this corpus is aligned with.
    pub encoder_seed: u64,
    /// Planted signature words per topic, empty for non-synthetic corpora.
    #[serde(default)]
    pub signatures: Vec<Vec<u32>>,
}

pub const CORPUS_VERSION: u32 = 1;

impl Corpus {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn embed_dim(&self) -> usize {
        self.word_vectors.first().map_or(0, Vec::len)
    }

    pub fn word_vector(&self, word: u32) -> &[f64] {
        &self.word_vectors[word as usize]
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocabulary.len() != self.word_vectors.len() {
            return Err(Error::Format("vocabulary and word table sizes differ".into()));
        }
        let d = self.embed_dim();
        if self.word_vectors.iter().any(|w| w.len() != d) {
            return Err(Error::Format("ragged word table".into()));
        }
        let synthetic = self.pairs.first().is_some_and(|p| p.truth_topic.is_some());
        for (i, p) in self.pairs.iter().enumerate() {
            if p.text.iter().any(|&w| w as usize >= self.vocabulary.len()) {
                return Err(Error::Format(format!("pair {i} has an unknown word id")));
            }
            if p.image.shape().len() != 2 || p.image.cols() != d {
                return Err(Error::Format(format!("pair {i} has patch dimension other than {d}")));
            }
            if p.truth_topic.is_some() != synthetic || p.truth_domain.is_some() != synthetic {
                return Err(Error::Format(format!("pair {i} has inconsistent truth labels")));
            }
        }
        Ok(())
    }
}

/// Mean word vector of each text, reduced to `target_dim` by a
/// principal-component projection fitted on the corpus.
pub fn embed_texts(corpus: &Corpus, target_dim: usize) -> Result<Tensor> {
    if corpus.is_empty() {
        return Err(Error::Contract("empty corpus".into()));
    }
    let d = corpus.embed_dim();
    if target_dim == 0 || target_dim > d {
        return Err(Error::Reduction(format!(
            "target dimension {target_dim} outside 1..={d}"
        )));
    }
    if corpus.len() < target_dim {
        return Err(Error::Reduction(format!(
            "{} texts cannot span {target_dim} components",
            corpus.len()
        )));
    }
    let rows: Vec<Vec<f64>> = corpus
        .pairs
        .iter()
        .map(|p| {
            let mut m = vec![0.0; d];
            for &w in &p.text {
                for (a, b) in m.iter_mut().zip(corpus.word_vector(w)) {
                    *a += b;
                }
            }
            let n = p.text.len().max(1) as f64;
            m.iter_mut().for_each(|v| *v /= n);
            m
        })
        .collect();
    pca_project(&rows, target_dim)
}

/// Projects centred rows onto the leading `k` principal axes. Axis signs are
/// fixed so that each axis' largest-magnitude coordinate is positive.
pub fn pca_project(rows: &[Vec<f64>], k: usize) -> Result<Tensor> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if n == 0 || k == 0 || k > d {
        return Err(Error::Reduction(format!("cannot project {n}×{d} onto {k} components")));
    }
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n as f64;
        }
    }
    let centred = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);
    let cov = centred.transpose() * &centred / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });
    let mut axes = DMatrix::zeros(d, k);
    for (c, &idx) in order.iter().take(k).enumerate() {
        let mut v = eig.eigenvectors.column(idx).into_owned();
        let pivot = v
            .iter()
            .cloned()
            .fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if pivot < 0.0 {
            v.neg_mut();
        }
        axes.set_column(c, &v);
    }
    let proj = centred * axes;
    let data = (0..n)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| proj[(i, j)])
        .collect();
    Tensor::matrix(n, k, data)
}

/// Result of one k-means run.
#[derive(Clone, Debug, PartialEq)]
pub struct KMeans {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances after seeding and after every iteration.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cen) in centroids.iter().enumerate() {
        let d = sq_dist(point, cen);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd's algorithm with k-means++ seeding, capped at `max_iter`
/// iterations and stopped once assignments no longer change.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iter: usize) -> Result<KMeans> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::Contract(format!("k = {k} must lie in 1..={n}")));
    }
    let mut rng = seeding::rng(seed, &[seeding::CLUSTER]);

    // k-means++ seeding
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    centroids.push(points[first].clone());
    let mut dist: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &w) in dist.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            (0..n).find(|&i| !chosen[i]).expect("k <= n")
        };
        chosen[pick] = true;
        centroids.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            dist[i] = dist[i].min(sq_dist(p, centroids.last().unwrap()));
        }
    }

    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    let mut trace = vec![objective(points, &assignments, &centroids)];
    let mut converged = false;
    for _ in 0..max_iter {
        centroids = update_centroids(points, &assignments, &centroids);
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        let stable = next == assignments;
        assignments = next;
        trace.push(objective(points, &assignments, &centroids));
        if stable {
            converged = true;
            break;
        }
    }
    Ok(KMeans {
        assignments,
        centroids,
        objective_trace: trace,
        converged,
    })
}

/// Best of `restarts` seeded runs by final objective; earlier runs win ties.
pub fn kmeans_restarts(points: &[Vec<f64>], k: usize, seed: u64, restarts: usize) -> Result<KMeans> {
    let mut best: Option<KMeans> = None;
    for r in 0..restarts.max(1) {
        let km = kmeans(points, k, seeding::derive(seed, &[r as u64]), KMEANS_MAX_ITER)?;
        let obj = *km.objective_trace.last().expect("non-empty trace");
        if best.as_ref().is_none_or(|b| obj < *b.objective_trace.last().unwrap()) {
            best = Some(km);
        }
    }
    Ok(best.expect("at least one run"))
}

fn update_centroids(points: &[Vec<f64>], assignments: &[usize], old: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = points[0].len();
    let mut sums = vec![vec![0.0; d]; old.len()];
    let mut counts = vec![0usize; old.len()];
    for (p, &a) in points.iter().zip(assignments) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(p) {
            *s += v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .zip(old)
        .map(|((s, c), o)| {
            if c == 0 {
                o.clone()
            } else {
                s.into_iter().map(|v| v / c as f64).collect()
            }
        })
        .collect()
}

fn objective(points: &[Vec<f64>], assignments: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &a)| sq_dist(p, &centroids[a]))
        .sum()
}

/// Groups assignments into index sets, dropping empty groups and ordering
/// groups by their smallest member.
fn groups_of(assignments: &[usize], k: usize, ids: &[usize]) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); k];
    for (&a, &id) in assignments.iter().zip(ids) {
        groups[a].push(id);
    }
    let mut groups: Vec<Vec<usize>> = groups.into_iter().filter(|g| !g.is_empty()).collect();
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort_by_key(|g| g[0]);
    groups
}

/// k-means over the rows of `embeddings`; returns row-index sets.
pub fn topic_cluster(embeddings: &Tensor, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let (n, d) = (embeddings.rows(), embeddings.cols());
    let points: Vec<Vec<f64>> = (0..n).map(|i| embeddings.data()[i * d..(i + 1) * d].to_vec()).collect();
    let km = kmeans_restarts(&points, k, seed, KMEANS_RESTARTS)?;
    let ids: Vec<usize> = (0..n).collect();
    Ok(groups_of(&km.assignments, k, &ids))
}

/// Cluster-wise TF-IDF: `(N_wl / N_l) · ln(L / (L_w + 1))` for every word
/// occurring in cluster `l`.
pub fn tfidf_scores(clusters: &[Vec<usize>], corpus: &Corpus) -> Result<Vec<BTreeMap<u32, f64>>> {
    let counts: Vec<BTreeMap<u32, usize>> = clusters
        .iter()
        .enumerate()
        .map(|(l, members)| {
            let mut c = BTreeMap::new();
            for &i in members {
                let pair = corpus
                    .pairs
                    .get(i)
                    .ok_or_else(|| Error::Contract(format!("cluster {l} references missing pair {i}")))?;
                for &w in &pair.text {
                    *c.entry(w).or_insert(0) += 1;
                }
            }
            if c.is_empty() {
                return Err(Error::Contract(format!("cluster {l} has no text")));
            }
            Ok(c)
        })
        .collect::<Result<_>>()?;
    let n_clusters = clusters.len() as f64;
    let mut df: BTreeMap<u32, usize> = BTreeMap::new();
    for c in &counts {
        for &w in c.keys() {
            *df.entry(w).or_insert(0) += 1;
        }
    }
    Ok(counts
        .iter()
        .map(|c| {
            let total: usize = c.values().sum();
            c.iter()
                .map(|(&w, &n)| {
                    let tf = n as f64 / total as f64;
                    let idf = (n_clusters / (df[&w] as f64 + 1.0)).ln();
                    (w, tf * idf)
                })
                .collect()
        })
        .collect())
}

/// Highest-scoring word per cluster; ties go to the smaller word id.
pub fn pick_topic_words(scores: &[BTreeMap<u32, f64>]) -> Result<Vec<(u32, f64)>> {
    scores
        .iter()
        .enumerate()
        .map(|(l, s)| {
            let mut best: Option<(u32, f64)> = None;
            for (&w, &v) in s {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((w, v));
                }
            }
            best.ok_or_else(|| Error::Contract(format!("cluster {l} has no scored words")))
        })
        .collect()
}

/// Splits `members` into at most `domains` groups by k-means over pooled
/// image patches.
pub fn domain_cluster(members: &[usize], corpus: &Corpus, domains: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if domains == 0 || domains > members.len() {
        return Err(Error::Contract(format!(
            "cannot split {} members into {domains} domains",
            members.len()
        )));
    }
    let points: Vec<Vec<f64>> = members.iter().map(|&i| corpus.pairs[i].pooled_image()).collect();
    let km = kmeans_restarts(&points, domains, seed, KMEANS_RESTARTS)?;
    Ok(groups_of(&km.assignments, domains, members))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopicCluster {
    pub id: usize,
    pub members: Vec<usize>,
    pub topic_word: u32,
    pub topic_label: String,
    pub topic_score: f64,
    /// Partition of `members` into visual domains.
    pub domains: Vec<Vec<usize>>,
}

impl TopicCluster {
    pub fn domain_of(&self, pair: usize) -> Option<usize> {
        self.domains.iter().position(|d| d.binary_search(&pair).is_ok())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChcParams {
    pub k_topics: usize,
    pub domains: usize,
    pub target_dim: usize,
}

impl Default for ChcParams {
    fn default() -> Self {
        Self {
            k_topics: 5,
            domains: 3,
            target_dim: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hierarchy {
    pub version: u32,
    pub clusters: Vec<TopicCluster>,
}

impl Hierarchy {
    pub fn cluster_of(&self, pair: usize) -> Option<usize> {
        self.clusters
            .iter()
            .position(|c| c.members.binary_search(&pair).is_ok())
    }

    /// Checks disjointness of clusters and that each cluster's domains
    /// partition its members.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for c in &self.clusters {
            if c.members.is_empty() {
                return Err(Error::Format(format!("cluster {} is empty", c.id)));
            }
            for &m in &c.members {
                if !seen.insert(m) {
                    return Err(Error::Format(format!("pair {m} is in two clusters")));
                }
            }
            let mut covered: Vec<usize> = c.domains.iter().flatten().copied().collect();
            covered.sort_unstable();
            if covered != c.members {
                return Err(Error::Format(format!(
                    "domains of cluster {} do not partition it",
                    c.id
                )));
            }
        }
        Ok(())
    }

    /// Restricts every cluster to the pairs accepted by `keep`, dropping
    /// domains and clusters that become empty.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> Hierarchy {
        let clusters = self
            .clusters
            .iter()
            .filter_map(|c| {
                let members: Vec<usize> = c.members.iter().copied().filter(|&m| keep(m)).collect();
                if members.is_empty() {
                    return None;
                }
                let domains = c
                    .domains
                    .iter()
                    .map(|d| d.iter().copied().filter(|&m| keep(m)).collect::<Vec<_>>())
                    .filter(|d| !d.is_empty())
                    .collect();
                Some(TopicCluster {
                    members,
                    domains,
                    ..c.clone()
                })
            })
            .collect();
        Hierarchy {
            version: self.version,
            clusters,
        }
    }

    /// Keeps only the clusters at the given positions, in that order.
    pub fn select(&self, positions: &[usize]) -> Hierarchy {
        Hierarchy {
            version: self.version,
            clusters: positions.iter().map(|&p| self.clusters[p].clone()).collect(),
        }
    }
}

/// Text embedding, topic clustering, topic words, then domains per topic.
pub fn build_hierarchy(corpus: &Corpus, params: ChcParams, seed: u64) -> Result<Hierarchy> {
    let emb = embed_texts(corpus, params.target_dim)?;
    let groups = topic_cluster(&emb, params.k_topics, seed)?;
    let scores = tfidf_scores(&groups, corpus)?;
    let words = pick_topic_words(&scores)?;
    let clusters = groups
        .into_iter()
        .zip(words)
        .enumerate()
        .map(|(id, (members, (word, score)))| {
            let u = params.domains.min(members.len());
            let domains = domain_cluster(&members, corpus, u, seeding::derive(seed, &[id as u64]))?;
            Ok(TopicCluster {
                id,
                members,
                topic_word: word,
                topic_label: corpus.vocabulary[word as usize].clone(),
                topic_score: score,
                domains,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let h = Hierarchy {
        version: HIERARCHY_VERSION,
        clusters,
    };
    h.validate()?;
    Ok(h)
}

/// Fraction of items whose group's majority label matches their own label.
pub fn purity(groups: &[Vec<usize>], label: impl Fn(usize) -> usize) -> f64 {
    let mut hits = 0;
    let mut total = 0;
    for g in groups {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &i in g {
            *counts.entry(label(i)).or_insert(0) += 1;
        }
        hits += counts.values().max().copied().unwrap_or(0);
        total += g.len();
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Topic purity and member-weighted domain purity against planted truth.
pub fn truth_purity(h: &Hierarchy, corpus: &Corpus) -> Option<(f64, f64)> {
    let topic = |i: usize| corpus.pairs[i].truth_topic;
    let domain = |i: usize| corpus.pairs[i].truth_domain;
    if corpus.pairs.iter().any(|p| p.truth_topic.is_none()) {
        return None;
    }
    let groups: Vec<Vec<usize>> = h.clusters.iter().map(|c| c.members.clone()).collect();
    let tp = purity(&groups, |i| topic(i).unwrap());
    let mut weighted = 0.0;
    let mut total = 0;
    for c in &h.clusters {
        weighted += purity(&c.domains, |i| domain(i).unwrap() * 1_000_003 + topic(i).unwrap()) * c.members.len() as f64;
        total += c.members.len();
    }
    Some((tp, weighted / total as f64))
}
