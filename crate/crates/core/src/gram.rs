//! Gradient-regulated meta-prompt learning.
//!
//! The regulator maps a raw prompt gradient `g` (`d × M`) to
//! `γ ⊙ g + β` with `γ = tanh(W_γ g + b_γ)` and `β = tanh(W_β g + b_β)`,
//! where both weights are `d × d` and the biases are `d`-vectors replicated
//! across the columns. The inner loop takes regulated steps on a support
//! loss; the outer loop differentiates the query loss at the adapted prompt
//! with respect to the initial prompt and the regulator.

use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, NodeId};
use crate::clipette::{BoundPrompt, ClassVocabulary, FrozenEncoders, PromptLayout, PromptState, Sample};
use crate::error::{Error, Result};
use crate::seeding;
use crate::tensor::Tensor;

/// Parameters of the gradient regulator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegulatorParams {
    pub w_gamma: Tensor,
    pub b_gamma: Tensor,
    pub w_beta: Tensor,
    pub b_beta: Tensor,
}

impl RegulatorParams {
    pub fn zeros(d: usize) -> Self {
        Self {
            w_gamma: Tensor::zeros(&[d, d]),
            b_gamma: Tensor::zeros(&[d, 1]),
            w_beta: Tensor::zeros(&[d, d]),
            b_beta: Tensor::zeros(&[d, 1]),
        }
    }

    /// Exact scaling by `gamma0`: zero weights, `b_γ = artanh(gamma0)`.
    pub fn pass_through(d: usize, gamma0: f64) -> Result<Self> {
        if !(gamma0 > 0.0 && gamma0 < 1.0) {
            return Err(Error::Domain(format!("gamma0 = {gamma0} must lie in (0, 1)")));
        }
        Ok(Self {
            b_gamma: Tensor::filled(&[d, 1], gamma0.atanh()),
            ..Self::zeros(d)
        })
    }

    /// Pass-through biases with Gaussian weights of the given std.
    pub fn near_pass_through<R: Rng + ?Sized>(d: usize, gamma0: f64, std: f64, rng: &mut R) -> Result<Self> {
        let mut p = Self::pass_through(d, gamma0)?;
        let draw = |rng: &mut R| {
            let data = (0..d * d)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    std * z
                })
                .collect();
            Tensor::matrix(d, d, data).expect("square")
        };
        p.w_gamma = draw(rng);
        p.w_beta = draw(rng);
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.w_gamma.rows()
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let expect: [(&Tensor, [usize; 2]); 4] = [
            (&self.w_gamma, [d, d]),
            (&self.b_gamma, [d, 1]),
            (&self.w_beta, [d, d]),
            (&self.b_beta, [d, 1]),
        ];
        for (t, shape) in expect {
            if t.shape() != shape {
                return Err(Error::Dimension {
                    op: "regulator",
                    left: t.shape().to_vec(),
                    right: shape.to_vec(),
                });
            }
            if !t.is_finite() {
                return Err(Error::NumericOverflow { op: "regulator" });
            }
        }
        Ok(())
    }

    pub fn tensors(&self) -> [&Tensor; 4] {
        [&self.w_gamma, &self.b_gamma, &self.w_beta, &self.b_beta]
    }

    /// Flattened `[W_γ, b_γ, W_β, b_β]`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|t| t.data().iter().copied()).collect()
    }

    pub fn from_vec(d: usize, v: &[f64]) -> Result<Self> {
        let n = 2 * d * d + 2 * d;
        if v.len() != n {
            return Err(Error::Contract(format!(
                "expected {n} regulator entries, got {}",
                v.len()
            )));
        }
        let (wg, rest) = v.split_at(d * d);
        let (bg, rest) = rest.split_at(d);
        let (wb, bb) = rest.split_at(d * d);
        Ok(Self {
            w_gamma: Tensor::matrix(d, d, wg.to_vec())?,
            b_gamma: Tensor::matrix(d, 1, bg.to_vec())?,
            w_beta: Tensor::matrix(d, d, wb.to_vec())?,
            b_beta: Tensor::matrix(d, 1, bb.to_vec())?,
        })
    }

    pub fn bind(&self, g: &mut Graph) -> BoundRegulator {
        BoundRegulator {
            w_gamma: g.param(self.w_gamma.clone()),
            b_gamma: g.param(self.b_gamma.clone()),
            w_beta: g.param(self.w_beta.clone()),
            b_beta: g.param(self.b_beta.clone()),
        }
    }

    pub fn bind_constant(&self, g: &mut Graph) -> BoundRegulator {
        BoundRegulator {
            w_gamma: g.constant(self.w_gamma.clone()),
            b_gamma: g.constant(self.b_gamma.clone()),
            w_beta: g.constant(self.w_beta.clone()),
            b_beta: g.constant(self.b_beta.clone()),
        }
    }

    fn axpy(&self, scale: f64, grads: &[Tensor; 4]) -> Result<Self> {
        Ok(Self {
            w_gamma: self.w_gamma.axpy(scale, &grads[0])?,
            b_gamma: self.b_gamma.axpy(scale, &grads[1])?,
            w_beta: self.w_beta.axpy(scale, &grads[2])?,
            b_beta: self.b_beta.axpy(scale, &grads[3])?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundRegulator {
    pub w_gamma: NodeId,
    pub b_gamma: NodeId,
    pub w_beta: NodeId,
    pub b_beta: NodeId,
}

impl BoundRegulator {
    pub fn nodes(&self) -> [NodeId; 4] {
        [self.w_gamma, self.b_gamma, self.w_beta, self.b_beta]
    }
}

/// The modulation pair `(γ, β)` for a gradient node.
pub fn modulation(g: &mut Graph, phi: &BoundRegulator, grad: NodeId) -> Result<(NodeId, NodeId)> {
    let shape = g.shape(grad).to_vec();
    let d = g.shape(phi.w_gamma)[0];
    if shape.len() != 2 || shape[0] != d {
        return Err(Error::Dimension {
            op: "regulate",
            left: shape,
            right: vec![d, 0],
        });
    }
    let m = shape[1];
    let mut half = |w: NodeId, b: NodeId| -> Result<NodeId> {
        let wg = g.matmul(w, grad)?;
        let br = g.replicate_cols(b, m)?;
        let pre = g.add(wg, br)?;
        g.tanh(pre)
    };
    let gamma = half(phi.w_gamma, phi.b_gamma)?;
    let beta = half(phi.w_beta, phi.b_beta)?;
    Ok((gamma, beta))
}

/// `γ ⊙ g + β`.
pub fn regulate(g: &mut Graph, phi: &BoundRegulator, grad: NodeId) -> Result<NodeId> {
    let (gamma, beta) = modulation(g, phi, grad)?;
    let scaled = g.hadamard(gamma, grad)?;
    g.add(scaled, beta)
}

/// Regulated gradient as a plain value.
pub fn regulate_value(phi: &RegulatorParams, grad: &Tensor) -> Result<Tensor> {
    let mut g = Graph::new();
    let p = phi.bind_constant(&mut g);
    let x = g.constant(grad.clone());
    let r = regulate(&mut g, &p, x)?;
    Ok(g.value(r).clone())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    pub alpha: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub inner_steps: usize,
    pub meta_batch: usize,
    pub total_tasks: usize,
    pub first_order: bool,
    pub regulator_enabled: bool,
    pub gamma0: f64,
    /// Std of the initial regulator weights; zero gives exact pass-through.
    pub regulator_init_std: f64,
    pub prompt_init_std: f64,
    /// Test-time step size; the training `alpha` when absent.
    pub test_alpha: Option<f64>,
    pub test_steps: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            lambda1: 0.1,
            lambda2: 20.0,
            inner_steps: 1,
            meta_batch: 4,
            total_tasks: 400,
            first_order: false,
            regulator_enabled: true,
            gamma0: 0.99,
            regulator_init_std: 0.0,
            prompt_init_std: 0.02,
            test_alpha: None,
            test_steps: 1,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("alpha", self.alpha),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
        ];
        if let Some((name, v)) = rates.iter().find(|(_, v)| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Config(format!(
                "{name} = {v} must be a non-negative finite rate"
            )));
        }
        if self.inner_steps == 0 {
            return Err(Error::Config("inner_steps must be at least 1".into()));
        }
        if self.meta_batch == 0 {
            return Err(Error::Config("meta_batch must be at least 1".into()));
        }
        if !(self.gamma0 > 0.0 && self.gamma0 < 1.0) {
            return Err(Error::Config(format!("gamma0 = {} must lie in (0, 1)", self.gamma0)));
        }
        if !(self.regulator_init_std >= 0.0 && self.prompt_init_std >= 0.0) {
            return Err(Error::Config("initialization scales must be non-negative".into()));
        }
        if let Some(a) = self.test_alpha {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::Config(format!("test_alpha = {a} must be non-negative")));
            }
        }
        Ok(())
    }

    pub fn test_rate(&self) -> f64 {
        self.test_alpha.unwrap_or(self.alpha)
    }
}

/// A pair of losses defining one episode.
pub trait Objective {
    fn support_loss(&self, g: &mut Graph, theta: &BoundPrompt) -> Result<NodeId>;
    fn query_loss(&self, g: &mut Graph, theta: &BoundPrompt) -> Result<NodeId>;
}

/// Cross-entropy of the frozen bi-encoder on support and query samples.
#[derive(Clone, Debug)]
pub struct Episode<'a> {
    pub model: &'a FrozenEncoders,
    pub vocab: ClassVocabulary,
    pub support: Vec<Sample>,
    pub query: Vec<Sample>,
}

impl Objective for Episode<'_> {
    fn support_loss(&self, g: &mut Graph, theta: &BoundPrompt) -> Result<NodeId> {
        self.model.ce_loss(g, &self.support, theta, &self.vocab)
    }

    fn query_loss(&self, g: &mut Graph, theta: &BoundPrompt) -> Result<NodeId> {
        self.model.ce_loss(g, &self.query, theta, &self.vocab)
    }
}

/// An objective given by two closures, handy for analytic surrogates.
pub struct FnObjective<S, Q> {
    pub support: S,
    pub query: Q,
}

impl<S, Q> Objective for FnObjective<S, Q>
where
    S: Fn(&mut Graph, &BoundPrompt) -> Result<NodeId>,
    Q: Fn(&mut Graph, &BoundPrompt) -> Result<NodeId>,
{
    fn support_loss(&self, g: &mut Graph, theta: &BoundPrompt) -> Result<NodeId> {
        (self.support)(g, theta)
    }

    fn query_loss(&self, g: &mut Graph, theta: &BoundPrompt) -> Result<NodeId> {
        (self.query)(g, theta)
    }
}

/// `steps` regulated descent steps on `loss` starting from `theta`. Without a
/// regulator the raw gradient is used. With `create_graph` the result stays
/// differentiable through every inner gradient.
pub fn inner_adapt<F>(
    g: &mut Graph,
    theta: BoundPrompt,
    phi: Option<&BoundRegulator>,
    loss: F,
    alpha: f64,
    steps: usize,
    create_graph: bool,
) -> Result<BoundPrompt>
where
    F: Fn(&mut Graph, &BoundPrompt) -> Result<NodeId>,
{
    let mut cur = theta;
    for _ in 0..steps {
        let l = loss(g, &cur)?;
        let grad = g.grad(l, &[cur.node], create_graph)?[cur.node];
        let update = match phi {
            Some(p) => regulate(g, p, grad)?,
            None => grad,
        };
        let step = g.scale(update, alpha)?;
        cur = BoundPrompt {
            node: g.sub(cur.node, step)?,
            layout: cur.layout,
        };
    }
    Ok(cur)
}

/// Outer-loop gradients summed over a batch of tasks.
#[derive(Clone, Debug, PartialEq)]
pub struct MetaGradients {
    pub theta: Tensor,
    /// `[W_γ, b_γ, W_β, b_β]`; zeros when the regulator is disabled.
    pub phi: [Tensor; 4],
    /// Query losses at the adapted prompts, one per task.
    pub query_losses: Vec<f64>,
}

/// Query loss at the adapted prompt for one task, built on `g`.
pub fn task_meta_loss<O: Objective + ?Sized>(
    g: &mut Graph,
    theta: BoundPrompt,
    phi: Option<&BoundRegulator>,
    task: &O,
    hyper: &HyperParams,
) -> Result<NodeId> {
    let adapted = inner_adapt(
        g,
        theta,
        phi,
        |g, t| task.support_loss(g, t),
        hyper.alpha,
        hyper.inner_steps,
        !hyper.first_order,
    )?;
    task.query_loss(g, &adapted)
}

pub fn meta_gradients<O: Objective>(
    theta: &PromptState,
    phi: &RegulatorParams,
    tasks: &[O],
    hyper: &HyperParams,
) -> Result<MetaGradients> {
    let d = theta.layout().dim;
    let mut acc_theta = Tensor::zeros(theta.matrix().shape());
    let mut acc_phi = [
        Tensor::zeros(&[d, d]),
        Tensor::zeros(&[d, 1]),
        Tensor::zeros(&[d, d]),
        Tensor::zeros(&[d, 1]),
    ];
    let mut losses = Vec::with_capacity(tasks.len());
    for task in tasks {
        let mut g = Graph::new();
        let t = theta.bind(&mut g);
        let p = hyper.regulator_enabled.then(|| phi.bind(&mut g));
        let q = task_meta_loss(&mut g, t, p.as_ref(), task, hyper)?;
        losses.push(g.value(q).item());
        let mut targets = vec![t.node];
        if let Some(p) = &p {
            targets.extend(p.nodes());
        }
        let grads = g.grad(q, &targets, false)?;
        acc_theta = acc_theta.axpy(1.0, g.value(grads[t.node]))?;
        if let Some(p) = &p {
            for (a, n) in acc_phi.iter_mut().zip(p.nodes()) {
                *a = a.axpy(1.0, g.value(grads[n]))?;
            }
        }
    }
    Ok(MetaGradients {
        theta: acc_theta,
        phi: acc_phi,
        query_losses: losses,
    })
}

/// Sum over tasks of the query loss at the adapted prompt, as a plain value.
pub fn meta_objective<O: Objective>(
    theta: &PromptState,
    phi: &RegulatorParams,
    tasks: &[O],
    hyper: &HyperParams,
) -> Result<f64> {
    let mut total = 0.0;
    for task in tasks {
        let mut g = Graph::new();
        let t = theta.bind(&mut g);
        let p = hyper.regulator_enabled.then(|| phi.bind_constant(&mut g));
        let exact = HyperParams {
            first_order: false,
            ..hyper.clone()
        };
        let q = task_meta_loss(&mut g, t, p.as_ref(), task, &exact)?;
        total += g.value(q).item();
    }
    Ok(total)
}

/// Per-batch training record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub tasks_seen: usize,
    pub mean_query_loss: f64,
    pub mean_alignment: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaState {
    pub theta: PromptState,
    pub phi: RegulatorParams,
    pub step: usize,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
}

impl MetaState {
    /// Gaussian prompts and a pass-through regulator.
    pub fn init(layout: PromptLayout, hyper: &HyperParams, seed: u64) -> Result<Self> {
        let mut rng = seeding::rng(seed, &[seeding::INIT]);
        let theta = PromptState::gaussian(layout, hyper.prompt_init_std, &mut rng)?;
        let phi = if hyper.regulator_init_std > 0.0 {
            RegulatorParams::near_pass_through(layout.dim, hyper.gamma0, hyper.regulator_init_std, &mut rng)?
        } else {
            RegulatorParams::pass_through(layout.dim, hyper.gamma0)?
        };
        Ok(Self {
            theta,
            phi,
            step: 0,
            trace: Vec::new(),
        })
    }

    /// The regulator used for adaptation, if enabled.
    pub fn regulator(&self, hyper: &HyperParams) -> Option<&RegulatorParams> {
        hyper.regulator_enabled.then_some(&self.phi)
    }
}

/// One plain gradient-descent update of `(θ, φ)` on a batch of tasks.
/// Returns the per-task query losses at the adapted prompts.
pub fn outer_step<O: Objective>(state: &mut MetaState, tasks: &[O], hyper: &HyperParams) -> Result<Vec<f64>> {
    let grads = meta_gradients(&state.theta, &state.phi, tasks, hyper)?;
    let theta = state.theta.matrix().axpy(-hyper.lambda1, &grads.theta)?;
    let phi = if hyper.regulator_enabled {
        state.phi.axpy(-hyper.lambda2, &grads.phi)?
    } else {
        state.phi.clone()
    };
    if !theta.is_finite() || phi.validate(state.theta.layout().dim).is_err() {
        return Err(Error::Divergence { step: state.step });
    }
    state.theta = PromptState::from_matrix(state.theta.layout(), theta)?;
    state.phi = phi;
    state.step += 1;
    Ok(grads.query_losses)
}

/// Normalized inner product of the regulated support gradient and the query
/// gradient at `theta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Alignment {
    pub value: f64,
    pub degenerate: bool,
}

fn loss_gradient(
    g: &mut Graph,
    theta: &BoundPrompt,
    loss: impl Fn(&mut Graph, &BoundPrompt) -> Result<NodeId>,
) -> Result<(NodeId, NodeId)> {
    let l = loss(g, theta)?;
    let grad = g.grad(l, &[theta.node], false)?[theta.node];
    Ok((l, grad))
}

pub fn alignment_diag<O: Objective + ?Sized>(
    theta: &PromptState,
    phi: Option<&RegulatorParams>,
    task: &O,
) -> Result<Alignment> {
    let mut g = Graph::new();
    let t = theta.bind(&mut g);
    let (_, gs) = loss_gradient(&mut g, &t, |g, t| task.support_loss(g, t))?;
    let (_, gq) = loss_gradient(&mut g, &t, |g, t| task.query_loss(g, t))?;
    let rs = match phi {
        Some(p) => regulate_value(p, g.value(gs))?,
        None => g.value(gs).clone(),
    };
    Ok(normalized_inner(&rs, g.value(gq)))
}

/// `⟨a, b⟩ / (‖a‖‖b‖)`, flagged degenerate when either norm is below 1e-12.
pub fn normalized_inner(a: &Tensor, b: &Tensor) -> Alignment {
    let (na, nb) = (a.norm(), b.norm());
    if na < 1e-12 || nb < 1e-12 {
        return Alignment {
            value: 0.0,
            degenerate: true,
        };
    }
    let dot: f64 = a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum();
    Alignment {
        value: (dot / (na * nb)).clamp(-1.0, 1.0),
        degenerate: false,
    }
}

/// `|L_q(θ') − [L_q(θ) − α⟨R(g_s), ∇L_q(θ)⟩]|` with `θ'` one regulated step.
pub fn taylor_residual<O: Objective + ?Sized>(
    theta: &PromptState,
    phi: Option<&RegulatorParams>,
    task: &O,
    alpha: f64,
) -> Result<f64> {
    let mut g = Graph::new();
    let t = theta.bind(&mut g);
    let (_, gs) = loss_gradient(&mut g, &t, |g, t| task.support_loss(g, t))?;
    let (lq, gq) = loss_gradient(&mut g, &t, |g, t| task.query_loss(g, t))?;
    let rs = match phi {
        Some(p) => regulate_value(p, g.value(gs))?,
        None => g.value(gs).clone(),
    };
    let adapted = PromptState::from_matrix(theta.layout(), theta.matrix().axpy(-alpha, &rs)?)?;
    let c = adapted.bind_constant(&mut g);
    let lq_adapted = task.query_loss(&mut g, &c)?;
    let predicted = g.value(lq).item() - alpha * rs.dot(g.value(gq))?;
    Ok((g.value(lq_adapted).item() - predicted).abs())
}

/// Test-time adaptation: regulated steps on the few-shot loss with `φ` fixed
/// and no higher-order graph.
pub fn adapt_at_test<F>(
    theta: &PromptState,
    phi: Option<&RegulatorParams>,
    loss: F,
    alpha: f64,
    steps: usize,
) -> Result<PromptState>
where
    F: Fn(&mut Graph, &BoundPrompt) -> Result<NodeId>,
{
    if steps == 0 {
        return Ok(theta.clone());
    }
    let mut g = Graph::new();
    let t = theta.bind(&mut g);
    let p = phi.map(|p| p.bind_constant(&mut g));
    let out = inner_adapt(&mut g, t, p.as_ref(), loss, alpha, steps, false)?;
    PromptState::from_matrix(theta.layout(), g.value(out.node).clone())
}

/// Runs the outer loop over a stream of task batches, calling `observe`
/// after every batch. A non-finite loss aborts with the failing step.
pub fn meta_train<O, I>(
    mut state: MetaState,
    batches: I,
    hyper: &HyperParams,
    mut observe: impl FnMut(&MetaState) -> Result<()>,
) -> Result<MetaState>
where
    O: Objective,
    I: IntoIterator<Item = Result<Vec<O>>>,
{
    hyper.validate()?;
    let mut seen = 0;
    for batch in batches {
        let batch = batch?;
        let started = Instant::now();
        let step = state.step;
        let mut align = 0.0;
        for task in &batch {
            align += alignment_diag(&state.theta, state.regulator(hyper), task)
                .map_err(|e| divergence(e, step))?
                .value;
        }
        let losses = outer_step(&mut state, &batch, hyper).map_err(|e| divergence(e, step))?;
        let mean_loss = losses.iter().sum::<f64>() / losses.len().max(1) as f64;
        if !mean_loss.is_finite() {
            return Err(Error::Divergence { step });
        }
        seen += batch.len();
        state.trace.push(TraceRecord {
            step,
            tasks_seen: seen,
            mean_query_loss: mean_loss,
            mean_alignment: align / batch.len().max(1) as f64,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
        observe(&state)?;
    }
    Ok(state)
}

fn divergence(e: Error, step: usize) -> Error {
    match e {
        Error::NumericOverflow { .. } => Error::Divergence { step },
        other => other,
    }
}
