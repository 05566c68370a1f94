//! Simulation toolkit for the mobile server problem.
//!
//! A single server holding a data page lives in Euclidean space. Each step a
//! batch of requests appears; the server may move at most `m` per step at cost
//! `D` per unit distance and pays the distance to every request. This crate
//! provides the cost models, the Move-to-Center online policy and baselines,
//! an offline solver with a brute-force 1D oracle, the adversarial lower-bound
//! constructions, and the potential-function verifier.

pub mod adversary;
pub mod algorithms;
pub mod analysis;
mod error;
pub mod geometry;
pub mod model;
pub mod offline;
pub mod random;

pub use error::{Error, Result};
pub use geometry::Point;
pub use model::{CostBreakdown, Instance, RequestBatch, Trace, Variant};
