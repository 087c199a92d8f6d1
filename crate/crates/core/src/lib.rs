//! Pulse-kicked damped Kerr oscillator in a truncated Fock basis.
//!
//! - [`fock`]: operators and density matrices
//! - [`dynamics`]: Lindblad free evolution alternated with kicks
//! - [`wigner`]: Wigner function on a grid and the negativity δ
//! - [`classical`]: the classical kicked map and bifurcation scans
//! - [`tsa`]: delay embedding and recurrence quantification
//! - [`entropy`]: spectral entropy of a series and ε sweeps

pub mod classical;
pub mod dynamics;
pub mod entropy;
pub mod error;
pub mod fock;
pub mod tsa;
pub mod wigner;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
