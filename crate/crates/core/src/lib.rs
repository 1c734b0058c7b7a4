//! Four-vertex model on an `L x M` rectangle with scalar-product boundary
//! conditions.
//!
//! - [`lattice`]: configurations, their path pictures, symmetries and a
//!   brute-force enumerator.
//! - [`exact`]: exact partition functions and refined counts.
//! - [`hahn`]: Hahn log-gas gap probabilities and the formation
//!   probabilities expressed through them.
//! - [`arctic`]: the limit shape of the disordered region.
//! - [`sampler`]: exact uniform sampling by coupling from the past.

pub mod arctic;
pub mod exact;
pub mod hahn;
pub mod lattice;
pub mod sampler;

pub use lattice::{FourVertexConfig, LatticeSpec, PathSystem, VertexType};
