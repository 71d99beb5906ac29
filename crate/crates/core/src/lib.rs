//! Displacement-propagation simulation of noisy bosonic circuits.
//!
//! Circuits are compositions of layers C_j . Lambda_{nbar,eta} . G_j acting
//! on m modes: a Gaussian unitary, a single-mode thermal loss channel, and a
//! cubic phase gate on the first mode. The crate estimates expectation values
//! of displacement operators, local coherent-state projectors, and quadrature
//! moments at the circuit output by propagating weighted displacement
//! operators backwards through the layers (Monte Carlo over phase-space
//! paths), classifies circuits by their contraction coefficients, and ships a
//! truncated Fock-space oracle for desk-scale verification.

pub mod channels;
pub mod error;
pub mod fock_oracle;
pub mod observables;
pub mod phase_space;
pub mod propagation;
pub mod regimes;
pub mod sampling;
pub mod special;

pub use error::{Error, Result};
