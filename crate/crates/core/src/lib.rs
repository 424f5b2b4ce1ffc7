//! Geometric and topological core: point clouds, planar neighborhood graphs
//! (Delaunay / Urquhart / RNG / MST), Rips persistence in two flavors (a
//! generic boundary-reduction engine and a fast planar geometric engine),
//! cascade extraction, and Wasserstein distances between persistence diagrams.

pub mod cascade;
pub mod cloud;
pub mod delaunay;
pub mod diagram;
pub mod error;
pub mod graphs;
pub mod kdtree;
pub mod order;
pub mod planar;
pub mod reduction;
pub mod unionfind;
pub mod wasserstein;

pub use cloud::PointCloud;
pub use diagram::{PersistenceDiagram, PersistencePair};
pub use error::CoreError;
