//! Finite-truncation restricted operator groups, polarized Fock spaces and
//! parallel transport of implementer phases.
//!
//! Every object lives on a finite [`linop::ModeWindow`] of signed modes
//! `e_{-n} .. e_{-1}, e_0 .. e_{m-1}`; the negative modes span `H₋` and the
//! non-negative ones `H₊`.

pub mod central_ext;
pub mod dirac1d;
pub mod error;
pub mod fock;
pub mod io;
pub mod linop;
pub mod loopgroup;
pub mod polarization;
pub mod sampling;
pub mod transport;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<Complex64>;

/// Shorthand for a complex number.
#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
