//! Tests whether a machine-generated pairwise ranking sequence could plausibly
//! have come from human annotators.
//!
//! Each item pair gets a Bernoulli parameter `theta` (the probability a human
//! picks the canonical first item), estimated from annotations in
//! [`estimation`]. A ranking sequence is then scored by its percentile value
//! Q in the probability-ordered list of all `2^N` sequences ([`qcompute`]),
//! and declared distinguishable from human output when `Q > 1 - epsilon`.

pub mod config;
pub mod dataset;
pub mod error;
pub mod estimation;
mod math;
pub mod model;
pub mod qcompute;
pub mod simulator;

pub use error::{Error, Result};
pub use model::{PairId, PairModel, Provenance, RankingSequence};
