//! Reciprocating quantum Otto refrigerator whose working medium is a pair of
//! coupled spins in an external field.
//!
//! The state is tracked through the expectation values of four operators
//! `(E, L, C, D)`; every stroke acts on them as an affine map
//! ([`AffinePropagator`]) and a full cycle is the product of four such maps.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adiabat;
pub mod cycle;
pub mod error;
pub mod isochore;
pub mod medium;
pub mod noise;
pub mod ode;
pub mod optimize;
pub mod propagator;
pub mod schedule;
pub mod sweep;
pub mod thermo;

pub use error::{Error, Result};
pub use medium::{Bath, FieldPoint, MediumParams, ObservableState};
pub use propagator::AffinePropagator;
