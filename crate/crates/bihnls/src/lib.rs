//! Simulation and diagnostics for the biharmonic nonlinear Schrodinger equation
//!
//! ```text
//! i u_t = Δ²u − μ Δu − |u|^{2σ} u,   x = (y, z) ∈ R^{d−1} × R,
//! ```
//!
//! restricted to data depending on (|y|, z).

pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod groundstate;
pub mod harness;
pub mod operators;
pub mod solver;

pub use error::{Error, Result};
