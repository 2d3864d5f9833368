//! Desk-scale laboratory for source-channel separation.
//!
//! The crate computes information quantities exactly or numerically, simulates
//! random-coding constructions over black-box channels and multi-user media, and
//! checks the covering-packing duality of excess-distortion probabilities by exact
//! enumeration over type classes.
//!
//! | module | contents |
//! |---|---|
//! | [`probability`] | pmfs (exact rational or f64), entropy, KL, mutual information, information density |
//! | [`types`] | empirical types, type classes, uniform-on-type-class sources, permutations |
//! | [`distortion`] | additive and permutation-invariant block distortions |
//! | [`channels`] | block kernels, DMCs, compound sets, composition `e o k o f`, builtins |
//! | [`rate_distortion`] | Blahut-Arimoto rate-distortion function and curves |
//! | [`capacity`] | compound-DMC capacity and the single-letterization chain |
//! | [`coding`] | i.i.d. codebooks, typicality decoding, error simulation, error exponent, separation pipeline |
//! | [`covering`] | exact excess-distortion probabilities, duality, `A_n`, threshold traces, Monte Carlo events |
//! | [`multiuser`] | N-user media, unicast demands, layered replacement, end-to-end separation |
//! | [`runner`] | JSON-configured experiment runner behind the `seplab` binary |
//!
//! Runnable walkthroughs live in this crate's `examples/` directory.

pub mod capacity;
pub mod channels;
pub mod coding;
pub mod covering;
pub mod distortion;
pub mod error;
pub mod multiuser;
pub mod probability;
pub mod rate_distortion;
pub mod report;
pub mod rng;
pub mod runner;
pub mod types;
pub mod verify;

pub use error::{Error, Result};
pub use probability::{Alphabet, Distribution, JointDistribution, Rational, StochasticMatrix};
