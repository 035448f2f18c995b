//! Adiabatic-passage simulation of NV centers in fiber-coupled nanocavities.
//!
//! The crate builds the truncated Hilbert space of `N` three-level emitters,
//! `N` cavities and one fiber mode, the full and effective Hamiltonians that
//! act on it, and integrates both the Schrödinger and the Lindblad master
//! equation. On top of that sit the two protocols it was written for,
//! W-state preparation and 1→N phase-covariant cloning, and a sweep engine
//! that reproduces fidelity curves as CSV files.
//!
//! The guide in `book/` walks through each layer; its code snippets are
//! compiled and run as doc-tests of this crate.

// Negated float comparisons also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod model;
pub mod operator;
pub mod protocols;
pub mod pulses;
pub mod state;
pub mod sweeps;

pub use error::{Error, Result};
pub use hilbert::{build_basis, Basis, BasisSpec, BasisState, Level};
pub use model::{FullModelOptions, HamiltonianGenerator, ModelKind, SystemParams};
pub use operator::Operator;
pub use pulses::{PulseParams, Schedule, SiteDrive};
pub use state::{DensityMatrix, StateVector};

pub use num_complex::Complex64 as C64;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/hilbert-space.md")]
    mod hilbert_space {}
    #[doc = include_str!("../../../book/src/pulses.md")]
    mod pulses {}
    #[doc = include_str!("../../../book/src/hamiltonians.md")]
    mod hamiltonians {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/protocols.md")]
    mod protocols {}
    #[doc = include_str!("../../../book/src/sweeps.md")]
    mod sweeps {}
}
