//! Byzantine fault-tolerant non-Bayesian learning over directed multi-agent
//! networks.
//!
//! The crate provides:
//! - exact checkers for the reduced-graph topology and network
//!   identifiability conditions that the learning rules require ([`graph`]),
//! - discrete per-agent likelihood models, KL machinery, and the C0/C1
//!   constants ([`signals`]),
//! - the Byzantine consensus primitives: Tverberg-point vector iteration
//!   and scalar trimmed averaging ([`consensus`]),
//! - the three learning rules and the pairwise decision rule ([`learning`]),
//! - configurable full-knowledge adversary strategies ([`adversary`]),
//! - a deterministic synchronous round engine with trace recording,
//!   convergence-rate fits, and failure-free matrix replay ([`sim`]).

pub mod adversary;
pub mod consensus;
pub mod error;
pub mod graph;
pub mod learning;
pub mod numeric;
pub mod rng;
pub mod signals;
pub mod sim;

pub use error::{Error, Result};
