//! Exact small-register simulator for decoherence and einselection.
//!
//! Everything is dense and exact: pure states and density matrices over a
//! handful of qubits, c-not circuits that premeasure and decohere, pointer
//! basis dephasing, environment records and their redundancy distance, the
//! predictability sieve, the probability constructions that rely on
//! decoherence, and an observer-memory model of records and branches.
//!
//! Qubit ordering is big-endian throughout: qubit 0 is the most significant
//! bit of a basis index.

// Index loops mirror the matrix formulas; negated comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod circuits;
pub mod decoherence;
mod error;
pub mod experiment;
pub mod linalg;
mod par;
pub mod probability;
pub mod records;
pub mod redundancy;
pub mod sieve;

pub use error::{Error, Result};
pub use linalg::{DensityMatrix, Projector, PureState, QubitSet, C64};
