//! Spectral analysis of bounded self-adjoint operators `L = a* + V` on `L^2(R^d)`:
//! convolution by an integrable kernel `a` plus multiplication by a potential `V`
//! vanishing at infinity.
//!
//! The crate computes essential-spectrum bounds, evaluates sufficient
//! conditions for discrete eigenvalues below the essential spectrum, and
//! cross-checks the resulting counts with Rayleigh-Ritz and dense
//! discretizations.

pub mod conv;
pub mod criteria;
pub mod eigen;
pub mod evolution;
pub mod error;
pub mod fourier;
pub mod galerkin;
pub mod indices;
pub mod model;
pub mod problem;
pub mod quadrature;

pub use error::{Error, Result};
