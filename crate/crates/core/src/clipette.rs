//! A small frozen bi-encoder with CLIP's classification interface.
//!
//! Both encoders mean-pool their token sequence, apply a fixed orthogonal
//! map and L2-normalize. Only prompt vectors are ever registered as graph
//! parameters; the maps and class embeddings enter as constants.
//!
//! Textual prompts and visual prompts live in one `d × (M + M_v)` matrix,
//! textual columns first. The per-item operations ([`FrozenEncoders::build_prompt`],
//! [`FrozenEncoders::encode_text`], [`FrozenEncoders::encode_image`]) follow the
//! token-sequence formulation literally; the batched routines used for
//! losses compute the same quantities with one matmul per modality.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, NodeId};
use crate::error::{Error, Result};
use crate::seeding;
use crate::tensor::Tensor;

/// Default softmax temperature.
pub const DEFAULT_TEMPERATURE: f64 = 0.07;

const MIN_NORM_SQ: f64 = 1e-24;

/// Haar-distributed orthogonal matrix from the QR factorization of a
/// Gaussian matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Tensor {
    let m = DMatrix::<f64>::from_fn(dim, dim, |_, _| StandardNormal.sample(rng));
    let qr = m.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let data = (0..dim)
        .flat_map(|i| (0..dim).map(move |j| (i, j)))
        .map(|(i, j)| q[(i, j)])
        .collect();
    Tensor::matrix(dim, dim, data).expect("square matrix")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrozenEncoders {
    text_map: Tensor,
    image_map: Tensor,
    temperature: f64,
}

impl FrozenEncoders {
    /// Orthogonal text and image maps drawn from `seed`.
    pub fn seeded(dim: usize, seed: u64, temperature: f64) -> Result<Self> {
        let text_map = random_orthogonal(dim, &mut seeding::rng(seed, &[seeding::TEXT_MAP]));
        let image_map = random_orthogonal(dim, &mut seeding::rng(seed, &[seeding::IMAGE_MAP]));
        Self::from_maps(text_map, image_map, temperature)
    }

    pub fn from_maps(text_map: Tensor, image_map: Tensor, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::Domain(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        let d = text_map.shape().first().copied().unwrap_or(0);
        if text_map.shape() != [d, d] || image_map.shape() != [d, d] {
            return Err(Error::Dimension {
                op: "encoders",
                left: text_map.shape().to_vec(),
                right: image_map.shape().to_vec(),
            });
        }
        Ok(Self {
            text_map,
            image_map,
            temperature,
        })
    }

    pub fn dim(&self) -> usize {
        self.text_map.rows()
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn text_map(&self) -> &Tensor {
        &self.text_map
    }

    pub fn image_map(&self) -> &Tensor {
        &self.image_map
    }

    fn check_prompt(&self, prompt: &BoundPrompt) -> Result<()> {
        if prompt.layout.dim != self.dim() {
            return Err(Error::Dimension {
                op: "prompt",
                left: vec![prompt.layout.dim],
                right: vec![self.dim()],
            });
        }
        Ok(())
    }

    /// The token sequence `[t_1, …, t_M, c_class]` as `d × 1` nodes.
    pub fn build_prompt(
        &self,
        g: &mut Graph,
        prompt: &BoundPrompt,
        vocab: &ClassVocabulary,
        class: usize,
    ) -> Result<Vec<NodeId>> {
        self.check_prompt(prompt)?;
        let c = vocab.embedding(class)?;
        let mut seq = Vec::with_capacity(prompt.layout.n_text + 1);
        for m in 0..prompt.layout.n_text {
            let sel = g.constant(prompt.layout.selector(&[m]));
            seq.push(g.matmul(prompt.node, sel)?);
        }
        seq.push(g.constant(Tensor::column(c.to_vec())));
        Ok(seq)
    }

    /// Mean-pool, text map, normalize.
    pub fn encode_text(&self, g: &mut Graph, seq: &[NodeId]) -> Result<NodeId> {
        let pooled = mean_pool(g, seq)?;
        let map = g.constant(self.text_map.clone());
        let f = g.matmul(map, pooled)?;
        normalize_columns(g, f)
    }

    /// Mean-pool over `[v_1, …, v_{M_v}, patch_1, …, patch_P]`, image map,
    /// normalize.
    pub fn encode_image(&self, g: &mut Graph, sample: &Sample, prompt: &BoundPrompt) -> Result<NodeId> {
        self.check_prompt(prompt)?;
        let d = self.dim();
        if sample.patches.cols() != d {
            return Err(Error::Dimension {
                op: "encode_image",
                left: sample.patches.shape().to_vec(),
                right: vec![sample.patch_count(), d],
            });
        }
        let mut seq = Vec::with_capacity(prompt.layout.n_visual + sample.patch_count());
        for m in 0..prompt.layout.n_visual {
            let sel = g.constant(prompt.layout.selector(&[prompt.layout.n_text + m]));
            seq.push(g.matmul(prompt.node, sel)?);
        }
        for p in 0..sample.patch_count() {
            let row = sample.patches.data()[p * d..(p + 1) * d].to_vec();
            seq.push(g.constant(Tensor::column(row)));
        }
        let pooled = mean_pool(g, &seq)?;
        let map = g.constant(self.image_map.clone());
        let f = g.matmul(map, pooled)?;
        normalize_columns(g, f)
    }

    /// Text features of every vocabulary class as columns of a `d × J` node.
    pub fn text_features(&self, g: &mut Graph, prompt: &BoundPrompt, vocab: &ClassVocabulary) -> Result<NodeId> {
        self.check_prompt(prompt)?;
        let j = vocab.len();
        let classes = g.constant(vocab.matrix());
        let n_text = prompt.layout.n_text;
        let summed = if n_text > 0 {
            let cols: Vec<usize> = (0..n_text).collect();
            let sel = g.constant(prompt.layout.selector(&cols));
            let s = g.matmul(prompt.node, sel)?;
            let rep = g.replicate_cols(s, j)?;
            g.add(rep, classes)?
        } else {
            classes
        };
        let pooled = g.scale(summed, 1.0 / (n_text + 1) as f64)?;
        let map = g.constant(self.text_map.clone());
        let f = g.matmul(map, pooled)?;
        normalize_columns(g, f)
    }

    /// Image features of a batch as columns of a `d × N` node.
    pub fn image_features(&self, g: &mut Graph, prompt: &BoundPrompt, samples: &[Sample]) -> Result<NodeId> {
        self.check_prompt(prompt)?;
        let d = self.dim();
        let n = samples.len();
        if n == 0 {
            return Err(Error::Contract("empty image batch".into()));
        }
        let n_visual = prompt.layout.n_visual;
        let mut sums = vec![0.0; d * n];
        let mut weights = vec![0.0; d * n];
        for (k, s) in samples.iter().enumerate() {
            if s.patches.cols() != d {
                return Err(Error::Dimension {
                    op: "image_features",
                    left: s.patches.shape().to_vec(),
                    right: vec![s.patch_count(), d],
                });
            }
            let w = 1.0 / (n_visual + s.patch_count()) as f64;
            for p in 0..s.patch_count() {
                for r in 0..d {
                    sums[r * n + k] += s.patches.data()[p * d + r];
                }
            }
            for r in 0..d {
                weights[r * n + k] = w;
            }
        }
        let sums = g.constant(Tensor::matrix(d, n, sums)?);
        let weights = g.constant(Tensor::matrix(d, n, weights)?);
        let summed = if n_visual > 0 {
            let cols: Vec<usize> = (prompt.layout.n_text..prompt.layout.total()).collect();
            let sel = g.constant(prompt.layout.selector(&cols));
            let s = g.matmul(prompt.node, sel)?;
            let rep = g.replicate_cols(s, n)?;
            g.add(rep, sums)?
        } else {
            sums
        };
        let pooled = g.hadamard(summed, weights)?;
        let map = g.constant(self.image_map.clone());
        let f = g.matmul(map, pooled)?;
        normalize_columns(g, f)
    }

    /// `N × J` matrix of cosine similarities divided by the temperature.
    pub fn logits(
        &self,
        g: &mut Graph,
        prompt: &BoundPrompt,
        vocab: &ClassVocabulary,
        samples: &[Sample],
    ) -> Result<NodeId> {
        let text = self.text_features(g, prompt, vocab)?;
        let image = self.image_features(g, prompt, samples)?;
        let it = g.transpose(image)?;
        let sims = g.matmul(it, text)?;
        g.scale(sims, 1.0 / self.temperature)
    }

    /// Class probabilities of one sample as a `1 × J` node.
    pub fn class_probs(
        &self,
        g: &mut Graph,
        sample: &Sample,
        prompt: &BoundPrompt,
        vocab: &ClassVocabulary,
    ) -> Result<NodeId> {
        let logits = self.logits(g, prompt, vocab, std::slice::from_ref(sample))?;
        let lp = log_softmax_rows(g, logits)?;
        g.exp(lp)
    }

    /// Mean negative log-likelihood of the labels.
    pub fn ce_loss(
        &self,
        g: &mut Graph,
        batch: &[Sample],
        prompt: &BoundPrompt,
        vocab: &ClassVocabulary,
    ) -> Result<NodeId> {
        if batch.is_empty() {
            return Err(Error::Contract("cross-entropy over an empty batch".into()));
        }
        let j = vocab.len();
        let n = batch.len();
        let mut onehot = vec![0.0; n * j];
        for (k, s) in batch.iter().enumerate() {
            if s.label >= j {
                return Err(Error::Lookup(s.label));
            }
            onehot[k * j + s.label] = 1.0;
        }
        let logits = self.logits(g, prompt, vocab, batch)?;
        let lp = log_softmax_rows(g, logits)?;
        let mask = g.constant(Tensor::matrix(n, j, onehot)?);
        let picked = g.hadamard(lp, mask)?;
        let total = g.sum(picked)?;
        g.scale(total, -1.0 / n as f64)
    }

    /// Argmax class of each sample under fixed prompts.
    pub fn predict(&self, prompts: &PromptState, vocab: &ClassVocabulary, samples: &[Sample]) -> Result<Vec<usize>> {
        let mut g = Graph::new();
        let bound = prompts.bind_constant(&mut g);
        let logits = self.logits(&mut g, &bound, vocab, samples)?;
        let v = g.value(logits);
        let j = vocab.len();
        Ok((0..samples.len())
            .map(|k| {
                let row = &v.data()[k * j..(k + 1) * j];
                argmax(row)
            })
            .collect())
    }

    /// Fraction of samples whose label is the predicted class.
    pub fn accuracy(&self, prompts: &PromptState, vocab: &ClassVocabulary, samples: &[Sample]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::Contract("accuracy over an empty set".into()));
        }
        let pred = self.predict(prompts, vocab, samples)?;
        let hits = pred.iter().zip(samples).filter(|(p, s)| **p == s.label).count();
        Ok(hits as f64 / samples.len() as f64)
    }

    /// Cross-entropy value under fixed prompts.
    pub fn loss_value(&self, prompts: &PromptState, vocab: &ClassVocabulary, samples: &[Sample]) -> Result<f64> {
        let mut g = Graph::new();
        let bound = prompts.bind_constant(&mut g);
        let l = self.ce_loss(&mut g, samples, &bound, vocab)?;
        Ok(g.value(l).item())
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn mean_pool(g: &mut Graph, seq: &[NodeId]) -> Result<NodeId> {
    let (&first, rest) = seq
        .split_first()
        .ok_or_else(|| Error::Contract("empty token sequence".into()))?;
    let mut acc = first;
    for &t in rest {
        acc = g.add(acc, t)?;
    }
    g.scale(acc, 1.0 / seq.len() as f64)
}

/// Divides each column of a `d × n` node by its Euclidean norm.
pub fn normalize_columns(g: &mut Graph, x: NodeId) -> Result<NodeId> {
    let d = g.shape(x)[0];
    let sq = g.hadamard(x, x)?;
    let sums = g.sum_cols(sq)?;
    if g.value(sums).data().iter().any(|&s| s < MIN_NORM_SQ) {
        return Err(Error::DegenerateEmbedding);
    }
    let norms = g.sqrt(sums)?;
    let rep = g.replicate_rows(norms, d)?;
    g.div(x, rep)
}

/// Row-wise log-softmax of an `N × J` node. The row maxima are subtracted as
/// constants, which leaves both values and gradients unchanged.
pub fn log_softmax_rows(g: &mut Graph, logits: NodeId) -> Result<NodeId> {
    let v = g.value(logits);
    let (n, j) = (v.rows(), v.cols());
    let mut shift = Vec::with_capacity(n * j);
    for r in 0..n {
        let m = v.data()[r * j..(r + 1) * j]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        shift.extend(std::iter::repeat_n(m, j));
    }
    let shift = g.constant(Tensor::matrix(n, j, shift)?);
    let z = g.sub(logits, shift)?;
    let e = g.exp(z)?;
    let s = g.sum_rows(e)?;
    let ls = g.log(s)?;
    let rep = g.replicate_cols(ls, j)?;
    g.sub(z, rep)
}

/// Plain softmax of a logit vector.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|&l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// `-log softmax(logits)[label]`, computed with log-sum-exp.
pub fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let (argmax, m) = logits
        .iter()
        .cloned()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, l)| if l > b.1 { (i, l) } else { b });
    let rest: f64 = logits
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != argmax)
        .map(|(_, &l)| (l - m).exp())
        .sum();
    m - logits[label] + rest.ln_1p()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassVocabulary {
    names: Vec<String>,
    embeddings: Vec<Vec<f64>>,
}

impl ClassVocabulary {
    pub fn new(names: Vec<String>, embeddings: Vec<Vec<f64>>) -> Result<Self> {
        if names.is_empty() || names.len() != embeddings.len() {
            return Err(Error::Contract(format!(
                "vocabulary needs matching non-empty names ({}) and embeddings ({})",
                names.len(),
                embeddings.len()
            )));
        }
        let d = embeddings[0].len();
        if d == 0 || embeddings.iter().any(|e| e.len() != d) {
            return Err(Error::Contract(
                "class embeddings must share a positive dimension".into(),
            ));
        }
        Ok(Self { names, embeddings })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.embeddings[0].len()
    }

    pub fn name(&self, class: usize) -> Result<&str> {
        self.names.get(class).map(String::as_str).ok_or(Error::Lookup(class))
    }

    pub fn embedding(&self, class: usize) -> Result<&[f64]> {
        self.embeddings
            .get(class)
            .map(Vec::as_slice)
            .ok_or(Error::Lookup(class))
    }

    /// `d × J` with class embeddings as columns.
    pub fn matrix(&self) -> Tensor {
        let (d, j) = (self.dim(), self.len());
        let mut data = vec![0.0; d * j];
        for (c, e) in self.embeddings.iter().enumerate() {
            for (r, &v) in e.iter().enumerate() {
                data[r * j + c] = v;
            }
        }
        Tensor::matrix(d, j, data).expect("consistent vocabulary")
    }
}

/// Column layout of the prompt matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptLayout {
    pub dim: usize,
    pub n_text: usize,
    pub n_visual: usize,
}

impl PromptLayout {
    pub fn total(&self) -> usize {
        self.n_text + self.n_visual
    }

    /// `total × 1` column with ones at `cols`; `θ · selector` sums those columns.
    fn selector(&self, cols: &[usize]) -> Tensor {
        let mut v = vec![0.0; self.total()];
        for &c in cols {
            v[c] = 1.0;
        }
        Tensor::column(v)
    }
}

/// A prompt matrix living on a graph, either a parameter leaf or a derived node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundPrompt {
    pub node: NodeId,
    pub layout: PromptLayout,
}

/// Learnable prompt vectors: `M` textual columns followed by `M_v` visual ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromptState {
    layout: PromptLayout,
    matrix: Tensor,
}

impl PromptState {
    pub fn from_matrix(layout: PromptLayout, matrix: Tensor) -> Result<Self> {
        if layout.total() == 0 {
            return Err(Error::Contract("prompt needs at least one vector".into()));
        }
        if matrix.shape() != [layout.dim, layout.total()] {
            return Err(Error::Dimension {
                op: "prompt",
                left: matrix.shape().to_vec(),
                right: vec![layout.dim, layout.total()],
            });
        }
        Ok(Self { layout, matrix })
    }

    pub fn zeros(layout: PromptLayout) -> Result<Self> {
        if layout.total() == 0 || layout.dim == 0 {
            return Err(Error::Contract("prompt needs at least one vector".into()));
        }
        Self::from_matrix(layout, Tensor::zeros(&[layout.dim, layout.total()]))
    }

    pub fn gaussian<R: Rng + ?Sized>(layout: PromptLayout, std: f64, rng: &mut R) -> Result<Self> {
        let n = layout.dim * layout.total();
        let data = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                std * z
            })
            .collect::<Vec<f64>>();
        if n == 0 {
            return Err(Error::Contract("prompt needs at least one vector".into()));
        }
        Self::from_matrix(layout, Tensor::matrix(layout.dim, layout.total(), data)?)
    }

    pub fn layout(&self) -> PromptLayout {
        self.layout
    }

    pub fn matrix(&self) -> &Tensor {
        &self.matrix
    }

    pub fn textual(&self, i: usize) -> Vec<f64> {
        assert!(i < self.layout.n_text);
        self.matrix.column_vec(i)
    }

    pub fn visual(&self, i: usize) -> Vec<f64> {
        assert!(i < self.layout.n_visual);
        self.matrix.column_vec(self.layout.n_text + i)
    }

    /// Registers the matrix as a differentiable parameter.
    pub fn bind(&self, g: &mut Graph) -> BoundPrompt {
        BoundPrompt {
            node: g.param(self.matrix.clone()),
            layout: self.layout,
        }
    }

    pub fn bind_constant(&self, g: &mut Graph) -> BoundPrompt {
        BoundPrompt {
            node: g.constant(self.matrix.clone()),
            layout: self.layout,
        }
    }
}

/// One image: `P` patch vectors (rows of a `P × d` tensor).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub patches: Tensor,
    pub label: usize,
    pub domain_tag: usize,
}

impl Sample {
    pub fn new(patches: Tensor, label: usize, domain_tag: usize) -> Result<Self> {
        if patches.shape().len() != 2 {
            return Err(Error::Contract("patches must be a P × d matrix".into()));
        }
        Ok(Self {
            patches,
            label,
            domain_tag,
        })
    }

    pub fn patch_count(&self) -> usize {
        self.patches.rows()
    }

    pub fn pooled(&self) -> Vec<f64> {
        let p = self.patch_count() as f64;
        self.patches
            .sum_cols()
            .expect("matrix")
            .data()
            .iter()
            .map(|v| v / p)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding;

    fn layout(d: usize, m: usize, mv: usize) -> PromptLayout {
        PromptLayout {
            dim: d,
            n_text: m,
            n_visual: mv,
        }
    }

    fn random_sample<R: Rng>(d: usize, p: usize, label: usize, rng: &mut R) -> Sample {
        let data = (0..p * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        Sample::new(Tensor::matrix(p, d, data).unwrap(), label, 0).unwrap()
    }

    fn random_vocab<R: Rng>(d: usize, j: usize, rng: &mut R) -> ClassVocabulary {
        let names = (0..j).map(|i| format!("c{i}")).collect();
        let emb = (0..j)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        ClassVocabulary::new(names, emb).unwrap()
    }

    #[test]
    fn orthogonal_maps() {
        let q = random_orthogonal(5, &mut seeding::rng(1, &[]));
        let qtq = q.transpose().unwrap().matmul(&q).unwrap();
        let err = qtq.zip_map(&Tensor::identity(5), "x", |a, b| a - b).unwrap().max_abs();
        assert!(err < 1e-12);
    }

    #[test]
    fn prompt_construction() {
        let mut rng = seeding::rng(3, &[]);
        let model = FrozenEncoders::seeded(4, 0, 0.07).unwrap();
        let vocab = random_vocab(4, 3, &mut rng);
        for m in [0, 4] {
            let state = PromptState::gaussian(layout(4, m, 1), 0.1, &mut rng).unwrap();
            let mut g = Graph::new();
            let bound = state.bind(&mut g);
            let seq = model.build_prompt(&mut g, &bound, &vocab, 1).unwrap();
            assert_eq!(seq.len(), m + 1);
            assert_eq!(g.value(*seq.last().unwrap()).data(), vocab.embedding(1).unwrap());
            let other = model.build_prompt(&mut g, &bound, &vocab, 2).unwrap();
            for k in 0..m {
                assert_eq!(g.value(seq[k]), g.value(other[k]));
                assert_eq!(g.value(seq[k]).data(), state.textual(k).as_slice());
            }
            assert_ne!(g.value(seq[m]), g.value(other[m]));
        }
        let mut g = Graph::new();
        let bound = PromptState::zeros(layout(4, 1, 0)).unwrap().bind(&mut g);
        assert!(matches!(
            model.build_prompt(&mut g, &bound, &vocab, 9),
            Err(Error::Lookup(9))
        ));
    }

    #[test]
    fn text_encoding_hand_case() {
        let model = FrozenEncoders::from_maps(Tensor::identity(2), Tensor::identity(2), 1.0).unwrap();
        let mut g = Graph::new();
        let a = g.constant(Tensor::column(vec![1.0, 0.0]));
        let b = g.constant(Tensor::column(vec![1.0, 2.0]));
        let f = model.encode_text(&mut g, &[a, b]).unwrap();
        // mean (1, 1), normalized (1/√2, 1/√2)
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = g.value(f).data();
        assert!((v[0] - h).abs() < 1e-15 && (v[1] - h).abs() < 1e-15);

        let v3 = g.constant(Tensor::column(vec![0.3, -0.4]));
        let one = model.encode_text(&mut g, &[v3]).unwrap();
        let three = model.encode_text(&mut g, &[v3, v3, v3]).unwrap();
        let diff = g.value(one).axpy(-1.0, g.value(three)).unwrap().max_abs();
        assert!(diff < 1e-15);

        let z = g.constant(Tensor::column(vec![0.0, 0.0]));
        assert_eq!(model.encode_text(&mut g, &[z]), Err(Error::DegenerateEmbedding));
    }

    #[test]
    fn image_encoding_pools_prompts_and_patches() {
        let mut rng = seeding::rng(5, &[]);
        let model = FrozenEncoders::from_maps(Tensor::identity(3), Tensor::identity(3), 1.0).unwrap();
        let sample = random_sample(3, 2, 0, &mut rng);
        let state = PromptState::gaussian(layout(3, 1, 2), 0.5, &mut rng).unwrap();
        let mut g = Graph::new();
        let bound = state.bind(&mut g);
        let f = model.encode_image(&mut g, &sample, &bound).unwrap();
        let mut pooled = vec![0.0; 3];
        for r in 0..3 {
            pooled[r] =
                (state.visual(0)[r] + state.visual(1)[r] + sample.patches.at(0, r) + sample.patches.at(1, r)) / 4.0;
        }
        let n: f64 = pooled.iter().map(|v| v * v).sum::<f64>().sqrt();
        for r in 0..3 {
            assert!((g.value(f).data()[r] - pooled[r] / n).abs() < 1e-14);
        }
        assert!((g.value(f).norm() - 1.0).abs() < 1e-9);

        let text_only = PromptState::zeros(layout(3, 2, 0)).unwrap();
        let mut g = Graph::new();
        let bound = text_only.bind(&mut g);
        let f = model.encode_image(&mut g, &sample, &bound).unwrap();
        let p = sample.pooled();
        let n: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((g.value(f).data()[0] - p[0] / n).abs() < 1e-14);
    }

    #[test]
    fn batched_features_match_per_item_encoders() {
        let mut rng = seeding::rng(9, &[]);
        let model = FrozenEncoders::seeded(6, 2, 0.07).unwrap();
        let vocab = random_vocab(6, 4, &mut rng);
        let state = PromptState::gaussian(layout(6, 2, 2), 0.3, &mut rng).unwrap();
        let samples: Vec<Sample> = (0..3).map(|k| random_sample(6, 4, k, &mut rng)).collect();
        let mut g = Graph::new();
        let bound = state.bind(&mut g);
        let text = model.text_features(&mut g, &bound, &vocab).unwrap();
        let image = model.image_features(&mut g, &bound, &samples).unwrap();
        for c in 0..vocab.len() {
            let seq = model.build_prompt(&mut g, &bound, &vocab, c).unwrap();
            let f = model.encode_text(&mut g, &seq).unwrap();
            let col = g.value(text).column_vec(c);
            for (a, b) in col.iter().zip(g.value(f).data()) {
                assert!((a - b).abs() < 1e-13);
            }
        }
        for (k, s) in samples.iter().enumerate() {
            let f = model.encode_image(&mut g, s, &bound).unwrap();
            let col = g.value(image).column_vec(k);
            for (a, b) in col.iter().zip(g.value(f).data()) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn probabilities_examples() {
        // identical class embeddings give a uniform distribution
        let mut rng = seeding::rng(11, &[]);
        let model = FrozenEncoders::seeded(4, 1, 0.07).unwrap();
        let e = vec![0.2, -0.1, 0.5, 0.3];
        let vocab =
            ClassVocabulary::new(vec!["a".into(), "b".into(), "c".into()], vec![e.clone(), e.clone(), e]).unwrap();
        let s = random_sample(4, 4, 0, &mut rng);
        let state = PromptState::gaussian(layout(4, 2, 2), 0.1, &mut rng).unwrap();
        let mut g = Graph::new();
        let bound = state.bind(&mut g);
        let p = model.class_probs(&mut g, &s, &bound, &vocab).unwrap();
        for &v in g.value(p).data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }

        // scalar softmax with similarities (0.8, 0.2) at τ = 1
        let p = softmax(&[0.8, 0.2]);
        let sigma = 1.0 / (1.0 + (-0.6_f64).exp());
        assert!((p[0] - sigma).abs() < 1e-15 && (p[1] - (1.0 - sigma)).abs() < 1e-15);
        assert!((p[0] - 0.6457).abs() < 1e-4);

        // huge temperature flattens everything
        let hot = FrozenEncoders::seeded(4, 1, 1e6).unwrap();
        let vocab = random_vocab(4, 5, &mut rng);
        let mut g = Graph::new();
        let bound = state.bind(&mut g);
        let p = hot.class_probs(&mut g, &s, &bound, &vocab).unwrap();
        for &v in g.value(p).data() {
            assert!((v - 0.2).abs() < 1e-5);
        }
    }

    #[test]
    fn cross_entropy_examples() {
        let mut rng = seeding::rng(13, &[]);
        let model = FrozenEncoders::seeded(4, 1, 0.07).unwrap();
        let e = vec![0.2, -0.1, 0.5, 0.3];
        let vocab = ClassVocabulary::new(vec!["a".into(), "b".into()], vec![e.clone(), e]).unwrap();
        let batch: Vec<Sample> = (0..4).map(|k| random_sample(4, 3, k % 2, &mut rng)).collect();
        let state = PromptState::zeros(layout(4, 1, 1)).unwrap();
        let loss = model.loss_value(&state, &vocab, &batch).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-12);

        // confident correct prediction: p_label = 1 - 1e-12
        let gap = ((1.0 - 1e-12) / 1e-12_f64).ln();
        let ce = cross_entropy(&[gap, 0.0], 0);
        assert!((ce - 1e-12).abs() < 1e-15);

        let mut g = Graph::new();
        let bound = state.bind(&mut g);
        assert!(matches!(
            model.ce_loss(&mut g, &[], &bound, &vocab),
            Err(Error::Contract(_))
        ));
        let bad = vec![random_sample(4, 3, 7, &mut rng)];
        assert!(matches!(
            model.ce_loss(&mut g, &bad, &bound, &vocab),
            Err(Error::Lookup(7))
        ));
    }

    #[test]
    fn encoder_maps_are_not_parameters() {
        let mut rng = seeding::rng(17, &[]);
        let model = FrozenEncoders::seeded(4, 1, 0.07).unwrap();
        let vocab = random_vocab(4, 3, &mut rng);
        let batch: Vec<Sample> = (0..3).map(|k| random_sample(4, 2, k, &mut rng)).collect();
        let state = PromptState::gaussian(layout(4, 2, 1), 0.1, &mut rng).unwrap();
        let mut g = Graph::new();
        let bound = state.bind(&mut g);
        let loss = model.ce_loss(&mut g, &batch, &bound, &vocab).unwrap();
        // every constant leaf reachable from the loss, including both maps, is rejected
        let mut stack = vec![loss];
        let mut seen = std::collections::HashSet::new();
        let mut constants = Vec::new();
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            if *g.op(n) == crate::autodiff::Op::Constant {
                constants.push(n);
            }
            stack.extend_from_slice(g.parents(n));
        }
        let maps = constants
            .iter()
            .filter(|&&c| g.value(c) == model.text_map() || g.value(c) == model.image_map())
            .count();
        assert_eq!(maps, 2);
        for c in constants {
            assert!(matches!(g.grad(loss, &[c], false), Err(Error::Contract(_))));
        }
        let gr = g.grad(loss, &[bound.node], false).unwrap()[bound.node];
        assert!(g.value(gr).max_abs() > 0.0);
    }
}
