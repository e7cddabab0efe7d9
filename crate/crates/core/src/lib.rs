//! Vocal roughness transformation and voice-quality analysis.
//!
//! The crate is organised bottom-up:
//!
//! - [`dsp`]: audio blocks, the high-pass biquad and the modulating oscillator.
//! - [`pitch`]: YIN-style f0 estimation, offline smoothing and a causal tracker.
//! - [`engine`]: the roughness transform itself (modulate, isolate the
//!   subharmonic residual, high-pass at a multiple of f0, mix back).
//! - [`pipeline`]: pitch tracking + engine as a block-size invariant stream.
//! - [`analysis`]: pulse detection and local jitter / shimmer.
//! - [`control`]: pulse-model extraction, jitter/shimmer interpolation and
//!   pitch-synchronous resynthesis.
//! - [`synth`]: deterministic synthetic vowels and pulse trains used as fixtures.

pub mod analysis;
pub mod control;
pub mod dsp;
pub mod engine;
mod error;
pub mod pipeline;
pub mod pitch;
pub mod synth;

pub use dsp::AudioBlock;
pub use error::{Error, Result};
