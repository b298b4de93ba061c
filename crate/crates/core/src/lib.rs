//! Numerical toolkit for one- and two-component Bose-Hubbard models on
//! arbitrary finite lattices.
//!
//! The crate is organized bottom-up:
//!
//! - [`lattice`]: model specifications, validation and standard lattices.
//! - [`fock`]: occupation-number bases, rank-1 symmetric-tensor states
//!   `(a⁺ψ)^N|0⟩`, their overlaps and one-body propagation.
//! - [`hamiltonian`]: sparse sector Hamiltonians, spin operators and the
//!   `1 − dτ·H` projector factor.
//! - [`eigensolver`]: dense and Lanczos lowest-eigenpair solvers.
//! - [`verify`]: ground-state uniqueness and cone-positivity checks, plus
//!   numerical checks of the auxiliary-field and splitting identities.
//! - [`qmc`]: sign-free projector Monte Carlo over rank-1 walkers.
//! - [`cli`]: experiment configs, command dispatch and reports.
//!
//! With the default `parallel` feature the walker, trial and mat-vec loops
//! run on rayon; without it every loop runs sequentially with identical
//! results.

pub mod cli;
pub mod eigensolver;
pub mod error;
pub mod fock;
pub mod hamiltonian;
pub mod lattice;
pub mod linalg;
pub(crate) mod par;
pub mod qmc;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
