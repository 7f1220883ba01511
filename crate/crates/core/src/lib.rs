//! Numerics for empirical measures induced by measuring a one-particle
//! observable on every boson of a (small, truncated) Bose gas.
//!
//! The crate is `no_std` with `alloc`. It contains:
//!
//! * [`ot1d`]: exact optimal transport between finitely supported measures on
//!   the real line (CDF and quantile representations, monotone coupling).
//! * [`scattering`]: zero-energy scattering length and the finite-ball
//!   Neumann problem for radial potentials.
//! * [`bogoliubov`]: the momentum lattice, spectral observables, the
//!   fluctuation vectors `sigma_f` and their covariance, and the dressed
//!   dispersion `F_p`, `G_p`, `tau_p`.
//! * [`fockspace`]: occupation bases, sparse mode operators, the excitation
//!   map and the modified operators `b`, `b*`, Bogoliubov generators.
//! * [`quantum_sim`]: torus Hamiltonians, ground states, reduced densities,
//!   model states and exact sampling of the joint measurement law.
//!
//! IO, experiments and the command line live in the companion `bosefluct`
//! crate.
#![no_std]

extern crate alloc;

pub mod bogoliubov;
pub mod error;
pub mod fockspace;
pub mod linalg;
pub mod ot1d;
pub mod quantum_sim;
pub mod scattering;

pub use error::{Error, Result};
pub use num_complex::Complex64;
