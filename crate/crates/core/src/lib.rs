//! Spectral asymmetry of the massless Dirac operator on the flat 3-torus
//! under metric perturbation.
//!
//! The crate assembles the Dirac operator on half-densities in the
//! orthonormal plane-wave spinor basis, computes spectra, evaluates the
//! second-order shift `c` of the double zero eigenvalue by several
//! independent routes, and estimates the eta invariant.
//!
//! Module map:
//! - [`fourier`]: lattice modes, Fourier fields, spinor vectors, charge conjugation.
//! - [`geometry`]: metric families, symmetric-gauge coframe, axial torsion.
//! - [`assembly`]: Galerkin matrices (3D, axisymmetric, closed-form references).
//! - [`spectral`]: Hermitian eigensolves, smallest-modulus eigenvalue, sweeps.
//! - [`perturbation`]: coefficient `c`, pseudoinverse, Rellich series.
//! - [`eta`]: eta-function partial sums and heat-trace estimates.
//! - [`spec_file`], [`report`], [`verify`], [`cli`]: command-line plumbing.

pub mod assembly;
pub mod cli;
pub mod error;
pub mod eta;
pub mod fourier;
pub mod geometry;
pub mod linalg;
pub mod perturbation;
pub mod report;
pub mod spec_file;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Default FFT grid size for truncation `n`: `max(8n, 32)`.
pub fn default_grid(n: usize) -> usize {
    (8 * n).max(32)
}
