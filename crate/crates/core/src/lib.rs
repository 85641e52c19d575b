//! Simulation of USV-assisted multi-AUV underwater data collection.
//!
//! The crate is organised along the physical and learning pipeline:
//!
//! - [`ocean`]: linear shallow-water surface waves and superposed Lamb-Oseen vortex currents.
//! - [`usbl`]: ultra-short baseline phase-difference measurements and their inversion.
//! - [`fim`]: Fisher information of the USV/AUV geometry and the USV waypoint planner.
//! - [`task`]: the multi-AUV data-collection environment.
//! - [`rl`]: from-scratch actor-critic learners (DDPG, SAC) and the training loop.
//! - [`experiments`]: configuration files and the experiment commands behind the CLI.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod experiments;
pub mod fim;
pub mod geometry;
pub mod ocean;
pub mod rl;
pub mod task;
pub mod usbl;

pub use error::{Error, Result};
pub use geometry::{Point2, Rect};
