//! Coreference resolution building blocks that run without the standard
//! library: a small dense kernel with reverse-mode gradients, a start/end
//! mention extractor with end-of-sentence limited end candidates, three
//! mention-clustering heads, multitask BCE training, and the CoNLL metric
//! suite.
//!
//! Everything here is pure computation over in-memory values. File formats,
//! checkpoints and the command-line driver live in the companion `coref`
//! crate.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod clusterers;
pub mod corpus;
pub mod error;
pub mod extractor;
pub mod gradcheck;
pub mod graph;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod synth;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use tensor::{ModelParams, Tensor};
