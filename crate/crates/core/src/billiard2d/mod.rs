//! Billiard in a convex table with energy loss at the boundary and random
//! perturbation of the reflection angle.

mod diffusion;
mod domain;
mod integral;
mod sim;

pub use diffusion::{reflected_diffusion_step, DiffusionControl, Diffusivity};
pub use domain::{ConvexDomain, SectionPoint, Shape, Wall, WallSpec};
pub use integral::{
    averaged_rhs, billiard_limit, check_integral_geometry, closed_rhs, decay_rate, liouville_mass, liouville_weights, section_integral,
    IntegralGeometry, LiouvilleWeights, SectionQuadrature,
};
pub use sim::{
    billiard_branching, billiard_replica, decay_deviation, occupation_grid, section_chain, section_chain_step, simulate_billiard,
    BilliardBranching, BilliardCollision, BilliardEnd, BilliardParams, BilliardRun, BilliardStop, Coefficient, Occupation,
};
