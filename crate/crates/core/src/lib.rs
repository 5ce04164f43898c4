//! Fairness-enhancing edge reweighting for random-walk node embeddings.
//!
//! The pipeline is: build or load a [`graph::Graph`] with group labels,
//! reweight its arcs ([`reweight`]), sample walks ([`walker`]), train
//! skip-gram embeddings ([`embedding`]) and score a downstream task
//! ([`diffusion`], [`tasks`]) per group with [`metrics::disparity`].
//! [`experiment`] wires the stages together for the command-line driver.

pub mod config;
pub mod diffusion;
pub mod embedding;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod metrics;
pub mod reweight;
pub mod rng;
pub mod tasks;
pub mod walker;

pub use error::{Error, Result};
