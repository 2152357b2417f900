//! Simulation and verification toolkit for two-prover proof systems built
//! from nonlocal games: exact game values, Weyl-Heisenberg rounding, clock
//! Hamiltonians, the Hamiltonian game and its zero-knowledge audit.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod games;
pub mod group;
pub mod hamiltonian;
pub mod protocol;
pub mod qcore;
pub mod seeds;

pub use error::{Error, Result};
