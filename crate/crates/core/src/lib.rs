//! Discrete harmonic measure on the integer lattice.
//!
//! The crate computes first-entrance distributions of simple random walk into
//! finite subsets of Z^d (exactly and by Monte Carlo), the lattice Green's
//! function and potential kernel, l-adic and ball Hausdorff contents with
//! Frostman measures, Cantor-type test sets, and the cube-tree decomposition
//! used to bound how many points can carry large harmonic measure.

pub mod audit;
pub mod dirichlet;
pub mod error;
pub mod forge;
pub mod hausdorff;
pub mod lab;
pub mod lattice;
pub mod potential;
pub mod quad;

pub use error::{Error, Result};
pub use lattice::{LadicCube, LatticeBall, LatticeBox, LatticeSet, Point};
