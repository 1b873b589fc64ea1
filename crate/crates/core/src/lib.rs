//! Variational Monte Carlo for second-quantized fermions whose wavefunction
//! is a Slater determinant of configuration-dependent orbitals factorized by
//! a CANDECOMP/PARAFAC (CP) tensor decomposition.
//!
//! The crate is organized around the main pieces of a VMC calculation:
//!
//! * [`fock`] — occupation-number configurations and fermionic phase bookkeeping,
//! * [`hamiltonians`] — Fermi-Hubbard and ab initio Hamiltonians (FCIDUMP),
//!   connected-configuration enumeration with magnitude pruning, local energies,
//! * [`ansatz`] — the CP-decomposed backflow determinant: parameters, fast
//!   amplitude updates, analytic log-derivatives, checkpoints,
//! * [`hf`] — mean-field orbitals used to seed the ansatz,
//! * [`sampler`] — Metropolis-Hastings chains and a deterministic exact-sum mode,
//! * [`sr`] — stochastic-reconfiguration parameter updates and the outer loop,
//! * [`observables`] — energy estimators, reduced density matrices and
//!   spin-spin correlation functions,
//! * [`oracle`] — independent references: exact diagonalization, brute-force
//!   amplitude evaluation and representability constructors,
//! * [`analysis`] — Morse-potential fits of energy-vs-distance curves.

pub mod analysis;
pub mod ansatz;
pub mod error;
pub mod fock;
pub mod hamiltonians;
pub mod hf;
pub mod observables;
pub mod oracle;
pub mod sampler;
pub mod sr;
pub mod util;

pub use error::Error;
