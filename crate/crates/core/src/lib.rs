//! Toy-scale transducer toolkit.
//!
//! Covers a small recurrent transducer (loss, gradients, greedy and beam
//! decoding), audio splicing for text-only domain adaptation, a CI-phone
//! branch with second-pass forced alignment for word timings, and word-level
//! confidence estimation from decoding features and confusion networks.

pub mod audio;
pub mod confidence;
pub mod error;
pub mod numcore;
pub mod rng;
pub mod splicer;
pub mod text;
pub mod transducer;
pub mod word_timing;

pub use error::{Error, Result};
