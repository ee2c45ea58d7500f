//! Mermin polynomials for GHZ-like states on noisy devices.
//!
//! The crate builds Mermin operators for `n` qubits (both by the two-line
//! recursion and from the closed-form coefficient table), simulates the
//! GHZ-like preparation circuit on a dense statevector, estimates operator
//! expectations from sampled shot counts, and emulates device noise
//! (weakened entanglement, depolarizing trajectories, readout flips).
//!
//! Orthogonal-measurement experiments run over chains of a device coupling
//! graph; the 53-qubit heavy-hex coupling map and its published reference
//! measurements ship as fixtures in [`fixtures`].
//!
//! Qubit `i` of a chain is bit `i` of the amplitude index (little-endian).
//! Bitstrings in [`measurement::CountsTable`] print qubit 0 first.

pub mod device;
pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod measurement;
pub mod mermin;
pub mod noise;
pub mod pauli;
pub mod rng;
pub mod statevector;
pub mod verify;

pub use error::{Error, Result};
pub use pauli::{PauliAxis, PauliString, Sign, WeightedPauliSum};
