//! Detected jump-error correcting quantum codes.
//!
//! The crate builds codes that live inside constant-excitation subspaces of
//! `N` qubits, verifies their correction conditions, synthesizes the unitary
//! recoveries that undo a detected spontaneous emission, and simulates the
//! resulting open-system dynamics both with a master-equation integrator and
//! with Monte-Carlo quantum trajectories.
//!
//! Module map:
//!
//! - [`qstate`]: basis states, state vectors, density matrices, sparse
//!   operators and the `exp(-i A t) psi` propagator.
//! - [`lindblad`]: decay models, jump operators, the effective Hamiltonian and
//!   the RK4 master-equation integrator.
//! - [`trajectory`]: the waiting-time jump unraveling and reproducible ensembles.
//! - [`designs`]: incidence structures, permutation-group orbits and
//!   spontaneous emission error designs.
//! - [`jumpcodes`]: code construction, verification and dimension bounds.
//! - [`recovery`]: recovery unitaries.
//! - [`experiments`]: the imperfection studies (misdetection, unequal rates,
//!   delayed recovery, detector dead time).
//!
//! Conventions: `hbar = 1`; qubit positions are numbered `1..=N` with position
//! 1 the most significant bit, so `|1100>` has qubits 1 and 2 excited.

pub mod designs;
pub mod error;
pub mod experiments;
pub mod jumpcodes;
pub mod lindblad;
pub mod qstate;
pub mod recovery;
pub mod trajectory;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
