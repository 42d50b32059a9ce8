//! Transmit precoder design for single-user and multi-user massive MIMO
//! under a transmit-power budget and *region constraints*: caps on the
//! average received power along the boundary of fixed geographic regions
//! that host legacy receivers.
//!
//! The crate is `no_std` + `alloc`. The `std` feature (on by default) only
//! switches the float math backend from `libm` to the platform one.
//!
//! Layout:
//! - [`arrays`]: UPA / ULA steering vectors.
//! - [`geometry`]: region boundaries, boundary sampling, characteristic
//!   matrices and the resulting [`geometry::ConstraintSet`].
//! - [`channels`]: seeded Rayleigh and clustered channel draws.
//! - [`dual`]: projected subgradient search over the dual variables.
//! - [`su`]: single-user designs (optimal, codebook, back-off).
//! - [`mu`]: multi-user designs (iterative sum-rate, block diagonalization,
//!   codebook, back-off).
//!
//! Powers are linear milliwatts everywhere inside the crate; see [`units`]
//! for the dBm boundary.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod arrays;
pub mod channels;
pub mod dual;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod mu;
pub mod precoder;
pub mod rng;
pub mod su;
pub mod units;

pub use error::{Error, Result};
pub use precoder::PrecoderSet;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;
