//! Inference and characterization of multi-attribute association networks.
//!
//! Nodes carry `K` continuous attributes measured on a shared set of `n`
//! samples. A pair of nodes is linked when a similarity measure between their
//! attribute vectors is significantly non-zero after false-discovery-rate
//! control. The canonical correlation of the two attribute vectors is the
//! primary measure; single-attribute Pearson correlation and its max/min
//! aggregates are available for comparison.

pub mod classify;
pub mod enrichment;
pub mod error;
pub mod inference;
pub mod network;
pub mod numkernel;
pub mod similarity;
pub mod simulation;

pub use error::{Error, Result};
