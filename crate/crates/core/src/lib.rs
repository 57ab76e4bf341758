//! Numerical toolkit for the discontinuous SD oscillator with constant
//! excitation `x'' + delta (x^2 + b) x' + x - sgn(x) - a = 0`, `a > 1`.
//!
//! The crate integrates the piecewise-smooth flow with exact switching-line
//! events, detects and classifies crossing, small and grazing limit cycles,
//! evaluates the closed-form Melnikov function with its zero diagram, and
//! traces the Hopf, grazing and double-limit-cycle bifurcation surfaces at
//! fixed `delta`.
//!
//! `no_std` capable with `alloc` (enable the `libm` feature instead of the
//! default `std`).

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` guards reject NaN along with the out-of-range sign, which
// `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod error;
mod math;
pub mod model;
pub mod integrate;
pub mod poincare;
pub mod melnikov;
pub mod bifurcation;
pub mod battery;

pub use error::{Error, Result};
