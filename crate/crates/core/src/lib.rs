//! Readout-error mitigation for diagonal observables under uncorrelated
//! per-qubit bit-flip noise.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every numerical
//! piece of the pipeline:
//!
//! - [`model`]: shared value types ([`PauliZString`], [`BitFlipModel`], ...)
//! - [`sim`]: dense statevector simulation of the layered ansatz circuits
//! - [`noise`]: the bit-flip channel, exact and sampled
//! - [`calibration`]: estimating a [`BitFlipModel`] from basis-state runs
//! - [`mitigation`]: the triangular ω system and its truncated expansion
//! - [`variance`]: closed-form variance prediction and sample overhead
//! - [`analysis`]: error curves, power-law fits and histogram statistics
//! - [`experiment`]: seeded, order-independent experiment kernels
//!
//! Bit `q` of an outcome index or operator mask always refers to qubit `q`.
#![no_std]

extern crate alloc;

pub mod analysis;
pub mod calibration;
pub mod error;
pub mod experiment;
pub mod mitigation;
pub mod model;
pub mod noise;
pub mod rng;
pub mod sim;
pub mod variance;

pub use error::{Error, Result};
pub use model::{
    operator_index, BitFlipModel, ExperimentConfig, OutcomeDistribution, PauliZString,
    PowerLawFit, QubitFlip, ShotHistogram, StateVector,
};

/// Largest register the dense representations accept unless a caller opts in
/// to a larger one.
pub const DEFAULT_MAX_QUBITS: usize = 12;

/// Hard ceiling on register size for the dense 2^Q representations.
pub const ABSOLUTE_MAX_QUBITS: usize = 24;
