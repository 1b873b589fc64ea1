//! Independent reference implementations used to validate the production
//! paths: exact diagonalization, brute-force ansatz evaluation, and
//! representability constructors.

pub mod ed;

pub use ed::{dense_hamiltonian, ground_state, lanczos_ground, EdVector};
