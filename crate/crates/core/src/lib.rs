//! Core of an emotion-prediction-oriented emotion-cause pair extractor.
//!
//! Everything here is pure computation over in-memory data and runs without
//! `std`: a small reverse-mode autodiff tape, the hierarchical Bi-LSTM clause
//! encoder, the emotion head with top-K candidate selection, genuine/fake pair
//! construction and scoring, the loss terms of both training phases, the
//! two-phase trainer, lexicon-gated extraction and the P/R/F1 harness.
//!
//! File formats, checkpoints and the command line live in the `epo-ecpe`
//! companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod emotion_head;
pub mod encoder;
mod error;
pub mod evaluation;
pub mod extractor;
pub mod layers;
pub mod math;
pub mod metrics;
pub mod model;
pub mod objectives;
pub mod optim;
pub mod pairing;
pub mod params;
pub mod synth;
pub mod tape;
pub mod trainer;

pub use error::{Error, Result};
pub use model::{EpoModel, ModelConfig};
