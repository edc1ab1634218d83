//! Exact arithmetic for doubly substochastic matrices: sub-defect, minimal
//! doubly stochastic completions, support structure, and decomposition into
//! convex combinations of subpermutation matrices, with brute-force oracles
//! for cross-checking on small inputs.

// Bounds are spelled in the form they are stated and checked (`x + 1 <= y`),
// and error values deliberately carry exact rationals for diagnostics.
#![allow(clippy::int_plus_one, clippy::result_large_err)]

pub mod completion;
pub mod decompose;
pub mod matrices;
pub mod oracle;
pub mod structure;
