//! Finite subsets of `Z^d` with fast membership and distance queries, the
//! covariance norm |x|_θ, and the lattice Green function.

mod green;
mod norm;
mod set;

pub use green::{green_asymptotic_constant, green_mc_origin, green_solve, GreenBoundary, GreenMethod, GreenTable};
pub use norm::ThetaNorm;
pub use set::{BucketGrid, LatticeSet, DEFAULT_NEIGHBORHOOD_CAP};
