//! File formats, campaign configuration, manifests, a parallel runner and
//! the `rem` command line around [`rem_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod report;
pub mod runner;

pub use error::{RemError, Result};
