//! Dataset samplers, benchmark harness, SVG rendering and the verification
//! suite behind the `topodr` binary.

pub mod bench;
pub mod datasets;
pub mod svg;
pub mod verify;
