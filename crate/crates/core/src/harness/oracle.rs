//! Finite-difference checks of the bi-level meta-gradient on a tiny
//! instance, and the alignment/Taylor diagnostics emitted by `diag`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clipette::{ClassVocabulary, FrozenEncoders, PromptLayout, PromptState, Sample};
use crate::error::Result;
use crate::gradcheck::{numeric_gradient, Comparison, Stencil};
use crate::gram::{meta_gradients, meta_objective, Episode, HyperParams, RegulatorParams};
use crate::seeding;
use crate::tensor::Tensor;

/// Support and query data of one task, independent of any encoder borrow.
#[derive(Clone, Debug)]
pub struct TaskData {
    pub vocab: ClassVocabulary,
    pub support: Vec<Sample>,
    pub query: Vec<Sample>,
}

impl TaskData {
    pub fn episode<'a>(&self, model: &'a FrozenEncoders) -> Episode<'a> {
        Episode {
            model,
            vocab: self.vocab.clone(),
            support: self.support.clone(),
            query: self.query.clone(),
        }
    }
}

/// A small random bi-level problem: `d = 3`, one textual and one visual
/// prompt vector, two classes, one support and two query samples per class.
#[derive(Clone, Debug)]
pub struct TinyInstance {
    pub model: FrozenEncoders,
    pub tasks: Vec<TaskData>,
    pub theta: PromptState,
    pub phi: RegulatorParams,
    pub hyper: HyperParams,
}

fn random_matrix<R: Rng + ?Sized>(r: usize, c: usize, scale: f64, rng: &mut R) -> Tensor {
    let data = (0..r * c).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
    Tensor::matrix(r, c, data).expect("shape")
}

pub fn tiny_instance(seed: u64, n_tasks: usize) -> Result<TinyInstance> {
    let d = 3;
    let mut rng = seeding::rng(seed, &[seeding::SHARED]);
    let model = FrozenEncoders::seeded(d, seed, 0.5)?;
    let layout = PromptLayout {
        dim: d,
        n_text: 1,
        n_visual: 1,
    };
    let tasks = (0..n_tasks)
        .map(|_| {
            let vocab = ClassVocabulary::new(
                vec!["a".into(), "b".into()],
                (0..2).map(|_| random_matrix(1, d, 1.0, &mut rng).into_data()).collect(),
            )?;
            let draw =
                |label: usize, rng: &mut rand_chacha::ChaCha8Rng| Sample::new(random_matrix(2, d, 1.0, rng), label, 0);
            let support = (0..2).map(|c| draw(c, &mut rng)).collect::<Result<Vec<_>>>()?;
            let query = (0..4).map(|k| draw(k % 2, &mut rng)).collect::<Result<Vec<_>>>()?;
            Ok(TaskData { vocab, support, query })
        })
        .collect::<Result<Vec<_>>>()?;
    let theta = PromptState::from_matrix(layout, random_matrix(d, 2, 0.5, &mut rng))?;
    let phi = RegulatorParams::near_pass_through(d, 0.9, 0.5, &mut rng)?;
    let hyper = HyperParams {
        alpha: 0.3,
        inner_steps: 1,
        ..HyperParams::default()
    };
    Ok(TinyInstance {
        model,
        tasks,
        theta,
        phi,
        hyper,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub seed: u64,
    pub theta_entries: usize,
    pub theta_max_relative_error: f64,
    pub phi_entries: usize,
    pub phi_max_relative_error: f64,
}

impl GradcheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.theta_max_relative_error.max(self.phi_max_relative_error)
    }
}

pub const FD_STEP: f64 = 1e-3;
pub const FD_FLOOR: f64 = 1e-8;

/// Compares the exact meta-gradients of the tiny instance against a
/// fourth-order central difference of the summed query loss.
pub fn gradcheck_instance(inst: &TinyInstance, seed: u64) -> Result<GradcheckReport> {
    let episodes: Vec<Episode> = inst.tasks.iter().map(|t| t.episode(&inst.model)).collect();
    let grads = meta_gradients(&inst.theta, &inst.phi, &episodes, &inst.hyper)?;
    let layout = inst.theta.layout();

    let num_theta = numeric_gradient(
        |m| {
            meta_objective(
                &PromptState::from_matrix(layout, m.clone())?,
                &inst.phi,
                &episodes,
                &inst.hyper,
            )
        },
        inst.theta.matrix(),
        FD_STEP,
        Stencil::Central5,
    )?;
    let theta_cmp = Comparison::between(&grads.theta, &num_theta, FD_FLOOR);

    let d = layout.dim;
    let flat = Tensor::vector(inst.phi.to_vec());
    let num_phi = numeric_gradient(
        |v| {
            meta_objective(
                &inst.theta,
                &RegulatorParams::from_vec(d, v.data())?,
                &episodes,
                &inst.hyper,
            )
        },
        &flat,
        FD_STEP,
        Stencil::Central5,
    )?;
    let analytic_phi = Tensor::vector(grads.phi.iter().flat_map(|t| t.data().iter().copied()).collect());
    let phi_cmp = Comparison::between(&analytic_phi, &num_phi, FD_FLOOR);

    Ok(GradcheckReport {
        seed,
        theta_entries: theta_cmp.checked,
        theta_max_relative_error: theta_cmp.max_relative_error,
        phi_entries: phi_cmp.checked,
        phi_max_relative_error: phi_cmp.max_relative_error,
    })
}

/// The oracle suite run by the `gradcheck` command.
pub fn gradcheck_suite(seed: u64) -> Result<GradcheckReport> {
    gradcheck_instance(&tiny_instance(seed, 2)?, seed)
}
