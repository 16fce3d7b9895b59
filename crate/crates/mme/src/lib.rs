//! File formats, experiment runner and command-line front end for the
//! detector pipeline in `mme-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod features;
pub mod formats;

pub use error::{Error, Result};
