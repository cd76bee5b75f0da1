//! Plane trees, their Lukasiewicz coding, and samplers for the tree models
//! built from a critical offspring law: plain and size-conditioned
//! Galton–Watson trees, the adjoint tree, and the invariant tree with an
//! infinite spine.

mod identities;
mod infinite;
mod planar;
mod sampling;

pub use identities::{
    dwass_enumerated, exact_walk_law, kesten_prefix_discrepancy, literal_prefix_discrepancy, phi_weight,
};
pub use infinite::{sample_hat_t_minus, sample_t_plus, HatTMinus, SpineSplit, TPlus, VertexKind};
pub use planar::PlanarTree;
pub use sampling::{
    sample_adjoint, sample_gw, sample_gw_conditioned, sample_gw_conditioned_with, BridgeMethod, GwSample,
    Truncated, REJECTION_LIMIT,
};
