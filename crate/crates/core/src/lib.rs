//! Frequency-permutation waveforms for joint radar and communication.
//!
//! A symbol is a permutation of `M` tones across `M` pulses. This crate
//! covers the permutation algebra, codebook subsets, radar ambiguity
//! metrics, channel synthesis, receivers, analytic error bounds and a
//! deterministic Monte Carlo engine.

pub mod bler;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod montecarlo;
pub mod perm;
pub mod radar;
pub mod receivers;
pub mod subsets;

pub use error::{Error, Result};
pub use perm::{Permutation, Rank};
pub use subsets::{SubsetSpec, Variant};
