//! Core algorithms for hardening API-sequence malware detectors against
//! malware evolution.
//!
//! The pipeline has four stages:
//!
//! * [`kgraph`] extracts a typed API knowledge graph from API documentation
//!   records ([`docmodel`]), and [`transe`] embeds it so that functionally
//!   equivalent APIs receive nearby vectors.
//! * [`resource`] recognises system resources in call arguments and encodes
//!   them with signed feature hashing over hierarchical substrings.
//! * [`seqembed`] turns a trace into a padded matrix and [`nnet`] trains a
//!   convolutional encoder plus classifier with a margin contrastive loss.
//! * [`eval`] measures aging, active-learning maintenance cost and latent
//!   stability over time; [`synthgen`] produces evolving synthetic corpora.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! experiment orchestration live in the `mme` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod docmodel;
pub mod error;
pub mod eval;
pub mod kgraph;
pub mod math;
pub mod nnet;
pub mod resource;
pub mod seed;
pub mod seqembed;
pub mod synthgen;
pub mod transe;

pub use error::{Error, Result};
