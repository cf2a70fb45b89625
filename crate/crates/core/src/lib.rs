//! Driven Kerr magnons, squeezed-magnon spin coupling and GHZ preparation.
//!
//! Frequencies are angular and expressed in rad/μs unless a run is set up in
//! natural units; times are the reciprocal. The Hilbert space is always
//! ordered spin₁ ⊗ … ⊗ spin_N ⊗ boson, with |e⟩ as spin index 0.

pub mod broadening;
pub mod dynamics;
pub mod error;
pub mod ghz;
pub mod hamiltonians;
pub mod linalg;
pub mod operators;
pub mod steady_state;
pub mod units;

mod dop853;
mod sparse;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Dense complex matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type Vector = nalgebra::DVector<C64>;
