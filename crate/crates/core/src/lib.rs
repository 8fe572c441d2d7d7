//! Design and evaluation of unitary space-time constellations for the
//! non-coherent Rayleigh block-fading channel.

pub mod error;
pub mod bounds;
pub mod channel;
pub mod constellation;
pub mod diversity;
pub mod matrix;
pub mod optimize;

pub use error::{Error, Result};
pub use matrix::{CMatrix, SkewHermitian, UnitaryMatrix, C64};
