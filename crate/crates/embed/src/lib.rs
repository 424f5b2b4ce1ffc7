//! Topology-aware dimensionality reduction on top of the persistence core:
//! differentiable losses, a small fully-connected autoencoder trained with
//! Adam, a free-coordinate optimization mode, and embedding quality metrics.

pub mod adam;
pub mod baselines;
pub mod eval;
pub mod losses;
pub mod nn;
pub mod train;
