//! Simulation and estimation toolkit for branching capacity on the integer lattice.
//!
//! The crate samples critical Galton–Watson trees (plain, size-conditioned,
//! adjoint, and the invariant two-sided tree), realizes tree-indexed walks on
//! `Z^d`, and estimates Newtonian, branching and Riesz capacities.

pub mod brw;
pub mod capacity;
pub mod cli;
pub mod config;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod point;
pub mod rng;
pub mod stats;
pub mod trees;

pub use error::{Error, Result};
pub use point::{Point, MAX_DIM};
