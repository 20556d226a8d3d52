//! Large-time decay of quantum averages under semibounded Hamiltonians.
//!
//! The crate evolves states given either as spectral measures or as finite
//! matrix models, evaluates the logarithmic integral
//! `∫ log‖F(t)‖ /(1+t²) dt` whose finiteness forbids exponential decay,
//! checks the same statement on the unit disk through the conformal map
//! of the lower half-plane, and classifies tails as exponential or
//! subexponential. A model zoo covers both the forbidden regime and the
//! permitted counterexamples.

pub mod analytic;
pub mod error;
pub mod evolution;
pub mod experiment;
pub mod khalfin;
pub mod io;
pub mod linalg;
pub mod models;
pub mod oracle;
pub mod quadrature;
pub mod series;
pub mod spectral;
pub mod tail;
pub mod verification;

pub use error::{Error, Result};
