#![no_std]
#![warn(rust_2018_idioms, trivial_numeric_casts, unused_qualifications)]

//! Ramsey interferometry of a single spin-1/2 ion embedded in a Coulomb
//! crystal near the linear-to-zigzag transition.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`]: equilibrium configurations and phonon normal modes of the
//!   periodic ion ring, in both the linear and the zigzag phase.
//! * [`dephasing`]: per-mode couplings, thermal decay/phase functions and the
//!   optimal trace distance of the Ramsey protocol.
//! * [`blp`]: information flux, the BLP non-Markovianity measure, revival
//!   detection and parameter sweeps.
//! * [`oracle`]: exact truncated-Fock simulation of the full pulse /
//!   free-evolution / pulse protocol for a handful of modes.
//!
//! All quantities are dimensionless with `hbar = m = a = omega_0 = 1`.
//! The crate is `no_std` and only needs `alloc`; IO and the command line live
//! in the `ionnm` companion crate.

extern crate alloc;

pub mod blp;
pub mod dephasing;
mod error;
pub mod lattice;
pub mod oracle;

pub use error::{Error, Result};

/// Smallest admissible `|Δ|`. Closer to the transition the harmonic
/// approximation of the crystal breaks down.
pub const MIN_ABS_DELTA: f64 = 1e-5;
