//! Local unitary (LU) equivalence of multipartite pure states.
//!
//! The crate computes trace invariants of reduced density matrices, the
//! Gram-type invariants of a reduced state's eigenprojectors, and a decision
//! procedure for tripartite states whose `Tr_A` reduction is generic. An
//! independent alternating polar search over local unitaries ([`lusearch`])
//! corroborates the verdicts numerically.
//!
//! Amplitudes are stored in mixed-radix, row-major order with subsystem 0 the
//! most significant digit: for dims `(N_A, N_B, N_C)` the basis state
//! `|j k l>` lives at index `(j * N_B + k) * N_C + l`.

pub mod equivalence;
pub mod error;
pub mod invariants;
pub mod linalg;
pub mod lusearch;
pub mod sampling;
pub mod selfcheck;
pub mod statespace;

pub use error::{Error, Result};

/// Dense complex matrix used throughout the crate.
pub type CMatrix = nalgebra::DMatrix<num_complex::Complex64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<num_complex::Complex64>;

pub use num_complex::Complex64;

/// Single-letter name for a subsystem index: 0 -> `A`, 1 -> `B`, ...
pub fn subsystem_name(index: usize) -> String {
    if index < 26 {
        char::from(b'A' + index as u8).to_string()
    } else {
        format!("S{index}")
    }
}
