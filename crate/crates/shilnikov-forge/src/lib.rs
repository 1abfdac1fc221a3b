//! Shilnikov homoclinic orbits in a three-dimensional singular Hopf normal
//! form with two slow variables and one fast variable, and in the Koper
//! model it is equivalent to.
//!
//! The crate covers the equilibrium spectrum, the singular (`eps = 0`)
//! geometry, invariant manifolds for `eps > 0`, a shooting formulation of
//! homoclinic orbits with Newton refinement and pseudo-arclength
//! continuation, and return maps near the homoclinic orbit.

pub mod cli;
pub mod error;
pub mod homoclinic;
pub mod integrator;
pub mod manifolds;
pub mod models;
pub mod returns;
pub mod singular;
pub mod spectral;

pub use error::{ForgeError, Result};
