//! Functional Bethe Ansatz toolkit for the real-q sinh-Gordon chain.

pub mod baxterflow;
pub mod error;
pub mod laurent;
pub mod operators;
pub mod qspecial;
pub mod quadrature;
pub mod thermo;
pub mod tropical;
pub mod verify;

pub use error::{FbaError, Result};
pub use num_complex::Complex64 as C64;
pub use qspecial::QParams;
