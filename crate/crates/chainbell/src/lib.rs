//! Numerical toolkit for the n-setting chained Bell scenario.
//!
//! The crate builds the scenario from scratch: reference two-qubit
//! realizations, the Bell operator and its classical/quantum bounds
//! ([`scenario`]), a see-saw optimizer that recovers the optimal violation
//! without assuming the reference form ([`optimizer`]), the sum-of-squares
//! certificate and state reconstruction ([`certify`]), the swap-circuit
//! isometry used for self-testing ([`swapcircuit`]), closed-form robustness
//! curves with empirical bound checks ([`robust`]), and certified-randomness
//! figures ([`random`]). Everything runs on the dense complex kernel in
//! [`qmath`]; local dimensions never exceed 64.

pub mod certify;
mod error;
pub mod optimizer;
pub mod qmath;
pub mod random;
pub mod robust;
pub mod scenario;
pub mod swapcircuit;
pub mod tol;

pub use error::{Error, Result};
