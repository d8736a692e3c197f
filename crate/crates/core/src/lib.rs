//! Numerical core for the quasineutral limit of the 1D Vlasov–Poisson system.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure numerics:
//!
//! * [`profile`]: homogeneous velocity profiles, the Penrose and δ-conditions,
//!   S-stable profiles and their Casimir integrands.
//! * [`dispersion`]: the dispersion function, unstable roots and eigenmodes.
//! * [`solver`]: a Strang-split semi-Lagrangian integrator on a periodic-x,
//!   truncated-v phase grid for the electron, ion and rescaled systems.
//! * [`diagnostics`]: conserved quantities, modulated energies, the Langmuir
//!   filter, weak-norm proxies and growth-rate fits.
//! * [`bgk`]: stationary BGK waves of the quasineutral Vlasov equation.
//!
//! File formats, configuration and the command line live in the `qnk` crate.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bgk;
pub mod diagnostics;
pub mod dispersion;
pub mod error;
pub mod fft;
pub mod interp;
pub mod profile;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
pub use num_complex::Complex64;
