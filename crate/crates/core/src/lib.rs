//! Bandit-driven active learning with distributed evaluation agents.
//!
//! The crate is organised around a single control loop ([`sched`]) that
//! combines a multi-armed bandit policy ([`bandit`]) with an optional
//! Gaussian-process surrogate ([`surrogate`]) and acquisition stage
//! ([`acquisition`]), evaluating arms of an [`env::ArmEnvironment`] on a
//! pool of concurrent agents. [`scaling`] holds the analytic agent-count
//! models and [`stats`] the bootstrap and signed-rank utilities used to
//! summarise replicated runs.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod acquisition;
pub mod bandit;
pub mod env;
pub mod error;
pub mod rng;
pub mod scaling;
pub mod sched;
pub mod stats;
pub mod surrogate;

pub use error::{Error, Result};
