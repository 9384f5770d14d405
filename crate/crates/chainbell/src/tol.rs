//! Numeric tolerances used across the crate.
//!
//! Constructed matrices (Kronecker chains, Bell operators) are held to a
//! tighter bound than user-supplied input, which may carry accumulated
//! rounding from outside.

/// Hermiticity required of matrices handed to the eigensolver.
pub const HERM_INPUT: f64 = 1e-10;

/// Hermiticity expected of matrices this crate constructs itself.
pub const HERM_CONSTRUCTED: f64 = 1e-12;

/// Frobenius residual allowed when reconstructing M from its eigensystem.
pub const EIG_RECONSTRUCT: f64 = 1e-9;

/// Involution deviation allowed for dichotomic observables.
pub const INVOLUTION: f64 = 1e-10;

/// Norm deviation allowed for vectors flagged normalized.
pub const VEC_NORM: f64 = 1e-12;

/// Below this value a state-dependent normalizer is treated as degenerate.
pub const NORMALIZER_FLOOR: f64 = 1e-9;
