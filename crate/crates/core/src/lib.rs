//! Ground-state energy of mixed p-spin glass models.
//!
//! The Hamiltonian on {-1,+1}^N is a sum of Gaussian p-spin interactions with
//! mixture coefficients c_p plus an external field h; its covariance is
//! N·ξ(R₁₂) where ξ(s) = Σ_p c_p² s^p is the mixing function and R₁₂ the
//! overlap. In the thermodynamic limit the ground-state energy per spin equals
//! the infimum of a zero-temperature Parisi functional
//!
//!   P(γ) = Ψ_γ(0, h) − ½ ∫₀¹ t ξ″(t) γ(t) dt
//!
//! over nondecreasing step functions γ on [0,1), where Ψ_γ solves a backward
//! nonlinear heat equation with terminal condition |x|. This crate provides
//!
//! * [`model`] — mixing functions ξ and their derivatives,
//! * [`order_param`] — step order parameters γ and discrete CDFs α,
//! * [`pde`] — the slab-exact Cole–Hopf solver for Ψ,
//! * [`functional`] — P(γ) and its finite-temperature analogue P_β(α),
//! * [`optimizer`] — derivative-free minimization over k-step γ (and α),
//! * [`control`] — a stochastic-optimal-control Monte Carlo verifier,
//! * [`oracle`] — exact finite-N disorder averages for cross-validation.

pub mod control;
pub mod error;
pub mod functional;
pub mod model;
pub mod optimizer;
pub mod oracle;
pub mod order_param;
pub mod pde;
pub mod rng;

mod exec;
mod quad;
#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use model::MixingFunction;
pub use order_param::{DiscreteCdf, StepOrderParam};
pub use pde::{BoundaryKind, PdeSolution, SpaceGrid};
