//! Meta-learned soft prompts for a frozen synthetic bi-encoder.
//!
//! The crate is organised bottom-up:
//!
//! - [`tensor`] and [`autodiff`]: dense `f64` tensors and a reverse-mode tape
//!   whose gradients can be differentiated again.
//! - [`clipette`]: a frozen bi-encoder with prompt-conditioned text and image
//!   encoders and temperature-scaled softmax classification.
//! - [`chc`]: cross-modal hierarchical clustering of an image-text corpus into
//!   topics (labelled by cluster-wise TF-IDF) and visual domains.
//! - [`episodes`]: a planted synthetic corpus generator and few-shot task
//!   sampling with a support/query domain shift.
//! - [`gram`]: the gradient regulating function, regulated inner-loop
//!   adaptation, the bi-level outer update and its diagnostics.
//! - [`harness`]: configuration, persistence and the evaluation protocols.
//!
//! Runnable walkthroughs of each capability live in `examples/`.

pub mod autodiff;
pub mod chc;
pub mod clipette;
pub mod episodes;
pub mod error;
pub mod gradcheck;
pub mod gram;
pub mod harness;
pub mod seeding;
pub mod tensor;

pub use error::{Error, Result};
