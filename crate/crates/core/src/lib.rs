//! Numerical audit of exchange-induced entanglement for two spheres held in
//! spatial superposition and coupled only through a classical gravitational
//! potential.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`model`] holds the physical parameters and branch geometry and derives
//!    the coupling scales (`kappa`, `Lambda`).
//! 2. [`potential`] evaluates the sourced sphere potential, [`quadrature`]
//!    integrates Coulomb-kernel products over ball pairs.
//! 3. [`amplitudes`] assembles the pair-exchange amplitude matrix `V` and the
//!    fourth-order exchange tensor, then collapses it into 2x2 branch
//!    coefficient matrices under three assembly conventions.
//! 4. [`entanglement`] turns a coefficient matrix into Schmidt data and a
//!    factorized/entangled verdict.
//! 5. [`fock`] checks the no-pair factorization theorem on a truncated
//!    two-sector Fock space, and [`firstq`] rebuilds the same coefficients
//!    from first-quantized packet propagators.
//!
//! All hot loops run through [`exec`], which keeps summation order fixed so
//! results are bit-identical with and without the `parallel` feature.

pub mod amplitudes;
pub mod entanglement;
pub mod error;
pub mod exec;
pub mod firstq;
pub mod fock;
pub mod model;
pub mod potential;
pub mod quadrature;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
