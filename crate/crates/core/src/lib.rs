// Copyright 2026 hlq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Hybrid-Liouvillian dynamics of a single dissipative qubit.
//!
//! The crate models a qubit whose relaxation events are discarded with
//! probability 1 − q, interpolating between non-Hermitian-Hamiltonian
//! (q = 0) and Lindbladian (q = 1) evolution. It provides:
//!
//! * [`liouvillian`] — the 4×4 evolution generator and its operator-form
//!   oracle,
//! * [`spectral`] — characteristic polynomial, eigenvalue clustering,
//!   and Jordan-structure classification of degeneracies,
//! * [`atlas`] — closed forms for the exceptional-point manifold, a
//!   Newton degeneracy scanner, and cross-validation between them,
//! * [`evolve`] — fixed-step integration of the chiral state-conversion
//!   protocols with fidelity/postselection-probability metrics,
//! * [`validate`] — the bundled invariant suites.

pub mod atlas;
pub mod evolve;
pub mod liouvillian;
pub mod params;
pub mod spectral;
pub mod state;
pub mod validate;

pub use liouvillian::{NhhMatrix, Superoperator};
pub use params::{ParamError, SystemParams};
pub use spectral::{Classification, DegeneracyRecord, SpectralData};
pub use state::{DensityMatrix, LiouvilleVector, ReferenceState};
