//! Integer-lattice geometry: points, finite sets, boxes and balls, the l-adic
//! cube net and onion-layer peeling.

mod cube;
pub mod io;
mod onion;
mod point;
mod set;

pub use cube::LadicCube;
pub(crate) use cube::pow;
pub use onion::{layer_count, OnionLayers, PeelMode};
pub use point::{Coords, Point};
pub use set::{ball_count, LatticeBall, LatticeBox, LatticeSet};
