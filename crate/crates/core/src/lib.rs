//! Pseudo-spectral simulation and diagnostics for the co-rotational
//! Beris-Edwards Q-tensor model of nematic liquid crystal hydrodynamics.
//!
//! The crate couples an incompressible Navier-Stokes solver with a
//! dissipative Q-tensor relaxation on a periodic 2- or 3-torus, supports both
//! the Landau-De Gennes polynomial bulk potential and the (Moreau-regularized)
//! Ball-Majumdar entropy potential, and ships a diagnostics layer that checks
//! the structural laws of the system: energy dissipation, maximum principles,
//! cancellation identities, and the renormalized parabolic-cylinder
//! quantities used in partial-regularity theory.

// Stencil code indexes several parallel arrays per loop, `!(x > 0)` guards
// reject NaN configuration values, and the spectral plumbing passes
// per-component coefficient vectors around.
#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::manual_is_multiple_of,
    clippy::type_complexity
)]

pub mod config;
pub mod diagnostics;
pub mod field;
pub mod potential;
pub mod quadrature;
pub mod run;
pub mod selftest;
pub mod snapshot;
pub mod solver;
pub mod spectral;
pub mod tensor;

pub use field::{QTensorField, ScalarField, VelocityField};
pub use spectral::SpectralGrid;
pub use tensor::{EigenTriple, Mat3, QTensor};
