// Copyright 2026 hlq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Generators of the qubit evolution: the Hamiltonian, its non-Hermitian
//! extension, and the 4×4 superoperator acting on vectorized states.
//!
//! The master equation reads
//!
//!   dρ/dt = −i[H, ρ] − (γ/2)({L†L, ρ} − 2q L ρ L†),   L = |↓⟩⟨↑|,
//!
//! and interpolates between purely postselected (q = 0, non-Hermitian
//! Hamiltonian) and trace-preserving (q = 1, Lindblad) dynamics. It is
//! implemented twice on purpose: [`build_hybrid_liouvillian`] produces the
//! matrix form that drives integration and spectral analysis, while
//! [`apply_generator`] computes the same derivative directly from the
//! operators. The two routes cross-check each other in the tests; this
//! catches basis-ordering and sign mistakes.

use ndarray::{array, Array2};
use num_complex::Complex64;

use crate::params::SystemParams;
use crate::state::{DensityMatrix, LiouvilleVector};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// The 4×4 matrix of the evolution generator in the Liouville basis
/// (ρ↑↑, ρ↑↓, ρ↓↑, ρ↓↓). Units of 1/time.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    matrix: Array2<Complex64>,
}

impl Superoperator {
    /// Wrap an externally built 4×4 matrix (tests, perturbed variants).
    pub fn from_matrix(matrix: Array2<Complex64>) -> Self {
        assert_eq!(matrix.dim(), (4, 4), "superoperator must be 4x4");
        Self { matrix }
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    /// Matrix–vector action on a Liouville vector.
    pub fn apply(&self, v: &LiouvilleVector) -> LiouvilleVector {
        let m = &self.matrix;
        let mut out = [c(0.0, 0.0); 4];
        for (r, o) in out.iter_mut().enumerate() {
            *o = m[(r, 0)] * v[0] + m[(r, 1)] * v[1] + m[(r, 2)] * v[2] + m[(r, 3)] * v[3];
        }
        LiouvilleVector(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// The non-Hermitian Hamiltonian H̃ = H − i(γ/2)|↑⟩⟨↑| governing the
/// fully postselected (q = 0) dynamics. Units of energy (ħ = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct NhhMatrix {
    matrix: Array2<Complex64>,
}

impl NhhMatrix {
    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    /// Both eigenvalues from the closed-form 2×2 characteristic equation.
    /// Exact enough to serve as an oracle for the 4×4 spectrum at q = 0.
    pub fn eigenvalues(&self) -> (Complex64, Complex64) {
        let m = &self.matrix;
        let tr = m[(0, 0)] + m[(1, 1)];
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        let disc = (tr * tr - 4.0 * det).sqrt();
        ((tr + disc) / 2.0, (tr - disc) / 2.0)
    }
}

/// H = (ω/2)(sin θ σ_x + cos θ σ_z).
pub fn build_hamiltonian(p: &SystemParams) -> Array2<Complex64> {
    let wx = p.omega_x();
    let wz = p.omega_z();
    array![
        [c(wz / 2.0, 0.0), c(wx / 2.0, 0.0)],
        [c(wx / 2.0, 0.0), c(-wz / 2.0, 0.0)]
    ]
}

/// H̃ = H − i(γ/2) L†L with L†L = |↑⟩⟨↑|.
pub fn build_nhh(p: &SystemParams) -> NhhMatrix {
    let mut m = build_hamiltonian(p);
    m[(0, 0)] += c(0.0, -p.gamma() / 2.0);
    NhhMatrix { matrix: m }
}

/// The superoperator matrix in the basis (ρ↑↑, ρ↑↓, ρ↓↑, ρ↓↓):
///
/// ```text
/// ⎛ −γ        iω_x/2      −iω_x/2     0      ⎞
/// ⎜ iω_x/2    −γ/2 − iω_z  0          −iω_x/2 ⎟
/// ⎜ −iω_x/2   0            −γ/2 + iω_z iω_x/2 ⎟
/// ⎝ γq        −iω_x/2      iω_x/2     0      ⎠
/// ```
pub fn build_hybrid_liouvillian(p: &SystemParams) -> Superoperator {
    let g = p.gamma();
    let wx = p.omega_x();
    let wz = p.omega_z();
    let a = wx / 2.0;
    let matrix = array![
        [c(-g, 0.0), c(0.0, a), c(0.0, -a), c(0.0, 0.0)],
        [c(0.0, a), c(-g / 2.0, -wz), c(0.0, 0.0), c(0.0, -a)],
        [c(0.0, -a), c(0.0, 0.0), c(-g / 2.0, wz), c(0.0, a)],
        [c(g * p.q(), 0.0), c(0.0, -a), c(0.0, a), c(0.0, 0.0)],
    ];
    Superoperator { matrix }
}

/// Time derivative of ρ computed directly from the operators:
/// −i[H, ρ] − (γ/2){L†L, ρ} + qγ L ρ L†.
///
/// This route never touches the 4×4 matrix; it is the oracle against
/// which [`build_hybrid_liouvillian`] is checked.
pub fn apply_generator(p: &SystemParams, rho: &DensityMatrix) -> Array2<Complex64> {
    let h = build_hamiltonian(p);
    let r = rho.matrix();
    let i = c(0.0, 1.0);

    // L = |↓⟩⟨↑|, L†L = |↑⟩⟨↑|
    let ldl = array![[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]];
    let l = array![[c(0.0, 0.0), c(0.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]];
    let l_dag = array![[c(0.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]];

    let commutator = h.dot(&r) - r.dot(&h);
    let anticommutator = ldl.dot(&r) + r.dot(&ldl);
    let jump = l.dot(&r).dot(&l_dag);

    commutator.mapv(|z| -i * z) + anticommutator.mapv(|z| z * (-p.gamma() / 2.0))
        + jump.mapv(|z| z * (p.q() * p.gamma()))
}
