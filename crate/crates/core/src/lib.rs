//! Truncated-Fock simulation of heralded cat-state breeding.
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! * [`fock`]: states and operators on a truncated photon-number basis,
//!   standard constructors, fidelity.
//! * [`hermite`], [`wigner`]: quadrature wavefunctions and Wigner functions.
//! * [`optics`]: beam splitter, loss channel, homodyne conditioning and the
//!   composite breeding step.
//! * [`protocol`]: the memory-cavity rate/fidelity model and a seeded
//!   discrete-event timeline.
//! * [`tomography`]: synthetic homodyne data, binned maximum-likelihood
//!   reconstruction and bootstrap uncertainties.
//!
//! Quadratures follow `x = (a + a†)/√2`, so the vacuum variance is 1/2.
#![cfg_attr(not(test), no_std)]
// `num_traits::Float` supplies float math without std. When std is linked
// anywhere in the build its inherent methods shadow the trait.
#![allow(unused_imports)]
// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
pub mod fock;
pub mod hermite;
mod linalg;
pub mod optics;
pub mod protocol;
pub mod quadrature;
pub mod tomography;
pub mod wigner;

pub use error::{Error, Result};
pub use fock::{
    coherent_state, fidelity, fock_state, squeeze_matrix, target_cat, DensityOperator, FockCutoff,
    StateVector, TargetCatSpec,
};
pub use num_complex::Complex64;

/// Dense complex matrix used for every operator in the crate.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
