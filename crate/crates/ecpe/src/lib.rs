//! File formats, checkpoints, experiment drivers and the command-line
//! interface around [`epo_core`].

pub mod checkpoint;
pub mod cli;
pub mod config;
mod error;
pub mod experiment;
pub mod io;
pub mod manifest;

pub use error::{Error, Result};
