//! Single-photon emission of a two-level emitter side-coupled to a
//! tight-binding waveguide: exact lattice dynamics, reduced (Volterra and
//! Markov) descriptions of the emitter amplitude, and the tools to compare
//! them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod analysis;
pub mod bessel;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod model;
pub mod reduced;
pub mod scenario;
pub mod state;
pub mod trace;

pub use error::{Error, Result};
pub use model::{ContinuumModel, LatticeModel, MarkovConstants, Waveguide};
pub use state::{JointState, SpectralAmplitude};
pub use trace::DecayTrace;
