//! Ground-state solver for small molecular Hamiltonians based on
//! contracted-equation residuals.
//!
//! The crate simulates, with exact statevectors, an iterative solver
//! whose working quantity is the two-body commutator residual
//! `A_e = <psi|[H, G_e]|psi>` over a pool of anti-Hermitian excitation
//! generators.  The residual doubles as the exact energy gradient for
//! appending `exp(t G_e)` to the state, so the solver couples residual
//! measurements to quasi-Newton step proposals, sparsifies and merges
//! the resulting exponentials into a layered product ansatz, and
//! tracks the two-qubit-gate cost of the circuit it is building.
//!
//! Module map:
//!
//! * [`integrals`] — FCIDUMP input/output and integral bookkeeping.
//! * [`pauli`] — sparse Pauli algebra and fermion-to-qubit mapping.
//! * [`statevector`] — exact state simulation and string exponentials.
//! * [`residual`] — excitation pool, residual vectors, density matrices.
//! * [`ansatz`] — layered product ansatz, sparsification, merging.
//! * [`optimize`] — the iteration driver and its five optimizers.
//! * [`oracle`] — slow reference implementations used for validation
//!   and for exact ground-state energies.

pub mod ansatz;
pub mod error;
pub mod integrals;
pub mod optimize;
pub mod oracle;
pub mod pauli;
pub mod residual;
pub mod statevector;

pub use ansatz::{Ansatz, SparsityCriterion};
pub use error::{CqeError, Result};
pub use integrals::MolecularIntegrals;
pub use optimize::{run_cqe, IterationRecord, OptimizerKind, RunConfig, RunResult, Termination};
pub use pauli::{Encoding, PauliSum};
pub use statevector::Statevector;
