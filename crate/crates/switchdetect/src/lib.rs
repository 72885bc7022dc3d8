//! Detecting search-engine switching from session logs with an online
//! Bayesian probit learner.
//!
//! The pipeline: parse the four-record-type search log ([`logs`]), turn each
//! session into sparse hashed features ([`features`]), train per-weight
//! Gaussian beliefs one observation at a time ([`model`]), orchestrate
//! binary or one-vs-rest multi-category tasks ([`task`]), and fuse/score
//! rankings ([`eval`]). A seeded synthetic log generator ([`synth`]) makes
//! the whole chain runnable and testable end to end without any real data.
//!
//! Start with the runnable programs in `examples/`; the `switchdetect`
//! binary wraps the same library calls as batch subcommands.

pub mod cli;
pub mod config;
pub mod eval;
pub mod features;
pub mod logs;
pub mod model;
pub mod probit;
pub mod quadrature;
pub mod synth;
pub mod task;
