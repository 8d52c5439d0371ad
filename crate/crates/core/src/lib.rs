//! Noisy finite-support distributions, the learning algorithms that relabel
//! them, Monte-Carlo certification of the induced distributions, and the
//! ensemble / pseudo-labeling distillation pipelines.

pub mod dist;
pub mod distill;
pub mod error;
pub mod expcli;
pub mod induced;
pub mod json;
pub mod learners;
pub mod parallel;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
