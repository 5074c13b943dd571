//! Streaming speech workload estimation.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audio;
pub mod bench;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod fillers;
pub mod framing;
pub mod model;
pub mod pipeline;
pub mod pitch;
pub mod syllables;
pub mod synth;
pub mod vad;

pub use error::{Error, Result};
