//! Spectral solvers and a finite-difference oracle for the linearized Ricci
//! equation on flat cylinders `R × T^d`.
//!
//! Fields are expanded in the real Fourier basis of the torus with exact
//! exponential-polynomial radial profiles, so mode equations are solved in
//! closed form. The [`fd_oracle`] module discretizes the same operators
//! independently and is used to validate every spectral result.

pub mod cross_section;
pub mod deformation_solver;
pub mod divergence_solver;
pub mod error;
pub mod expansion;
pub mod fd_oracle;
pub mod green_kernel;
pub mod mode_ode;
pub mod profile;
pub mod quadrature;
pub mod three_circles;

pub use error::{Error, Result};
