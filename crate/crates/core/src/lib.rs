//! Motional dynamics of trapped ions in a tapered (funnel-shaped) Paul trap.
//!
//! The taper couples the axial and radial vibrational modes of a single ion,
//! turning the radial mode into a driven squeezed Kerr oscillator. This crate
//! provides:
//!
//! - [`fock`]: truncated Fock-space operator algebra over the tensor product
//!   of the radial (x) and axial (z) modes, with an optional two-level spin;
//! - [`model`]: trap and drive parameter models, plus lab-frame,
//!   interaction-picture, and time-averaged effective Hamiltonians;
//! - [`dynamics`]: adaptive state-vector propagation with observable
//!   recording (mean phonon numbers, quantum Fisher information, norm);
//! - [`analytics`]: closed forms for the Kerr and squeeze unitaries, the
//!   moments and QFI of Kerr-evolved coherent states, and a commutator-sum
//!   time-averaging engine that rebuilds the effective Hamiltonian from the
//!   oscillating terms of the interaction picture;
//! - [`chain`]: equilibrium positions and normal-mode spectra of an ion
//!   string, including the taper-induced modification of the radial modes.
//!
//! All Hamiltonians are stored as H/ħ in rad/s; frequencies are angular
//! throughout the library (the CLI converts from Hz at its boundary).

pub mod analytics;
pub mod chain;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod model;

pub use error::{Error, Result};
