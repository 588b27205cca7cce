//! Option-price surfaces modelled by closed-form waves of the nonlinear
//! Schrödinger equation: the wave families, a finite-difference residual
//! check against the PDE, a Black-Scholes reference generator, a
//! Levenberg-Marquardt calibrator and Greeks.
//!
//! Data-parallel loops go through [`Exec`]; build without the default
//! `parallel` feature for a purely sequential library.

pub mod blackscholes;
pub mod error;
pub mod fitting;
pub mod greeks;
pub mod numerics;
pub mod par;
pub mod pde_verify;
pub mod waves;

pub use error::{Error, Result};
pub use par::Exec;
