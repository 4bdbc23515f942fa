//! Solvers and a numerical laboratory for Hamilton-Jacobi equations on star
//! networks with Kirchhoff junction conditions.
//!
//! The crate discretizes K half-line edges glued at a junction, builds
//! monotone finite-difference schemes for the stationary equation
//! u + H_i(u_x) = f_i and the Cauchy problem u_t + H_i(u_x) = f_i with the
//! flux condition Σ_i u_{x_i}(0⁻) = B, and measures their convergence under
//! grid refinement and vanishing artificial viscosity.

pub mod analysis;
pub mod cauchy;
pub mod error;
pub mod hamiltonian;
pub mod lab;
pub mod netgrid;
pub mod par;
pub mod rng;
pub mod stationary;

pub use error::{Error, Result};
