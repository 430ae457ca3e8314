//! Few-shot incremental learning with active class selection.
//!
//! The crate has three layers:
//!
//! * a learner: threshold-based incremental clustering over feature vectors
//!   ([`cluster_memory`]), Gaussian pseudo-rehearsal, and a one-vs-rest linear
//!   hinge classifier ([`linear_classifier`]);
//! * class-selection policies that rank classes by cluster statistics and turn
//!   ranks into attractive/repulsive navigation forces ([`class_selection`],
//!   [`navigation`]);
//! * a deterministic gridworld simulator and experiment harness that pit the
//!   incremental learner against a store-everything batch baseline
//!   ([`world_sim`], [`harness`]).
//!
//! Everything downstream of a `(config, seed)` pair is reproducible; wall-clock
//! training times are the only non-deterministic output.

pub mod class_selection;
pub mod cluster_memory;
pub mod error;
pub mod feature_store;
pub mod harness;
pub mod linear_classifier;
pub mod navigation;
pub mod world_sim;

pub use error::{Error, Result};
