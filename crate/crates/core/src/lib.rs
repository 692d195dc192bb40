//! Task-unaware lifelong imitation learning on a deterministic 2D
//! pick-and-place world.
//!
//! The crate is organised bottom-up:
//!
//! - [`taskworld`]: arena dynamics, task suites, scripted expert, paraphraser.
//! - [`encoders`]: frozen vision/language embedding stand-ins and a PCA probe.
//! - [`policy`]: windowed MLP with a Gaussian-mixture head, exact gradients,
//!   AdamW and checkpoints.
//! - [`memory`]: the episodic memory shared by replay and retrieval.
//! - [`lifelong`]: sequential training with naive, ER, EWC, AGEM and PackNet.
//! - [`recall`]: quiz rollouts, retrieval, separation segments, sample
//!   weighting and weighted local adaptation.
//! - [`harness`]: experiment configuration, orchestration and metrics.

// Validation writes `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod encoders;
pub mod error;
pub mod harness;
pub mod lifelong;
pub mod memory;
pub mod policy;
pub mod recall;
pub mod rollout;
pub mod seed;
pub mod taskworld;

pub use error::{Error, Result};
pub use memory::{Admission, EpisodicMemory};
pub use policy::{GmmParams, PolicyConfig, PolicyParams};
pub use recall::{TaskReport, WeightVector};
pub use taskworld::{Demonstration, Family, Frame, TaskSpec, WorldState};
