//! Numerical engine for the double-scaling regime of a singularly perturbed
//! GUE partition function.
//!
//! The partition function
//!
//!   E_N(z, t) = (1/N!) ∫ ∏_j exp(-z²/(2x_j²) + t/x_j - x_j²/2) ∏_{j<k} (x_k - x_j)² dⁿx
//!
//! is governed, for t ~ u1/√N and z ~ √(u2/N), by a pair of time-dependent
//! Hamiltonian flows in the deformation parameters (u1, u2). This crate
//! implements:
//!
//! - the flow Hamiltonians, shift terms, and analytic gradients ([`hamiltonian`]);
//! - the rational Lax family A(ζ), B_j(ζ) behind the flows, with the spectral
//!   expansion tying its eigenvalue to H1 and H2 ([`lax`]);
//! - small-u2 seed expansions built from the φ±,j coefficient machinery ([`seed`]);
//! - adaptive Runge-Kutta integration of the full and reduced flows ([`flow`]);
//! - large-N predictions of log E_N and its log-derivatives ([`predict`]);
//! - an exact finite-N Hankel-determinant oracle via orthogonal polynomials
//!   on a discretized measure ([`oracle`]);
//! - a self-test suite covering every module's invariants ([`selftest`]).
//!
//! The `singular-gue` binary exposes these as `seed`, `flow`, `reach`,
//! `predict`, `oracle`, `compare`, and `selftest` subcommands; the `examples/`
//! directory holds one runnable example per capability.

pub mod compare;
pub mod error;
pub mod flow;
pub mod hamiltonian;
pub mod lax;
pub mod oracle;
pub mod predict;
pub mod quad;
pub mod report;
pub mod seed;
pub mod selftest;
pub mod state;

pub use error::{Error, Result};
pub use state::{CanonicalState, ReducedState};
