// Copyright 2026 hlq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Qubit states and their Liouville-space (vectorized) representation.
//!
//! The vectorization convention is fixed once and for all: a density
//! matrix maps to the component order (ρ↑↑, ρ↑↓, ρ↓↑, ρ↓↓), matching the
//! row/column order of the superoperator built in [`crate::liouvillian`].

use ndarray::{array, Array2};
use num_complex::Complex64;
use thiserror::Error;

/// Lower bound on the smallest eigenvalue admitted at construction.
/// Integrator round-off produces tiny negative eigenvalues.
pub const POSITIVITY_TOL: f64 = 1e-10;

/// Largest admissible deviation from Hermiticity at construction.
pub const HERMITICITY_TOL: f64 = 1e-9;

/// Slack on the upper trace bound (trace must lie in (0, 1]).
pub const TRACE_UPPER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("state is not Hermitian: deviation {deviation:.3e} exceeds {HERMITICITY_TOL:.0e}")]
    NotHermitian { deviation: f64 },
    #[error("state trace {trace} must lie in (0, 1]")]
    TraceOutOfRange { trace: f64 },
    #[error("state is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },
    #[error("state entry is not finite")]
    NonFinite,
}

/// A 2×2 qubit density matrix: Hermitian, positive semidefinite within
/// [`POSITIVITY_TOL`], trace in (0, 1].
///
/// Entries are stored exactly as given (after validation), so
/// vectorize/devectorize round-trips are bit-exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    uu: Complex64,
    ud: Complex64,
    du: Complex64,
    dd: Complex64,
}

impl DensityMatrix {
    /// Validate and store the four entries (ρ↑↑, ρ↑↓, ρ↓↑, ρ↓↓).
    pub fn new(
        uu: Complex64,
        ud: Complex64,
        du: Complex64,
        dd: Complex64,
    ) -> Result<Self, StateError> {
        for z in [uu, ud, du, dd] {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(StateError::NonFinite);
            }
        }
        let deviation = (du - ud.conj()).norm().max(uu.im.abs()).max(dd.im.abs());
        if deviation > HERMITICITY_TOL {
            return Err(StateError::NotHermitian { deviation });
        }
        let trace = uu.re + dd.re;
        if !(trace > 0.0 && trace <= 1.0 + TRACE_UPPER_TOL) {
            return Err(StateError::TraceOutOfRange { trace });
        }
        let min_eigenvalue = hermitian_min_eigenvalue(uu, ud, du, dd);
        if min_eigenvalue < -POSITIVITY_TOL {
            return Err(StateError::NotPositive { min_eigenvalue });
        }
        Ok(Self { uu, ud, du, dd })
    }

    /// Validate a 2×2 matrix.
    pub fn from_matrix(m: &Array2<Complex64>) -> Result<Self, StateError> {
        assert_eq!(m.dim(), (2, 2), "density matrix must be 2x2");
        Self::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
    }

    /// Projector |ψ⟩⟨ψ| of a (normalized) pure state a|↑⟩ + b|↓⟩.
    pub fn pure(a: Complex64, b: Complex64) -> Result<Self, StateError> {
        Self::new(
            a * a.conj(),
            a * b.conj(),
            b * a.conj(),
            b * b.conj(),
        )
    }

    pub fn uu(&self) -> Complex64 {
        self.uu
    }

    pub fn ud(&self) -> Complex64 {
        self.ud
    }

    pub fn du(&self) -> Complex64 {
        self.du
    }

    pub fn dd(&self) -> Complex64 {
        self.dd
    }

    pub fn matrix(&self) -> Array2<Complex64> {
        array![[self.uu, self.ud], [self.du, self.dd]]
    }

    pub fn trace(&self) -> f64 {
        self.uu.re + self.dd.re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_min_eigenvalue(self.uu, self.ud, self.du, self.dd)
    }

    /// Tr(ρ σ) with another state (both Hermitian, so the trace is real).
    pub fn overlap(&self, other: &DensityMatrix) -> f64 {
        let t = self.uu * other.uu
            + self.ud * other.du
            + self.du * other.ud
            + self.dd * other.dd;
        t.re
    }
}

/// Smallest eigenvalue of the Hermitian part of a 2×2 matrix.
fn hermitian_min_eigenvalue(uu: Complex64, ud: Complex64, du: Complex64, dd: Complex64) -> f64 {
    let a = uu.re;
    let d = dd.re;
    let b = (ud + du.conj()) / 2.0;
    let mid = 0.5 * (a + d);
    let rad = (0.5 * (a - d)).hypot(b.norm());
    mid - rad
}

/// A vector in the 4-dimensional Liouville space, ordered
/// (ρ↑↑, ρ↑↓, ρ↓↑, ρ↓↓).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiouvilleVector(pub [Complex64; 4]);

impl LiouvilleVector {
    pub fn zero() -> Self {
        Self([Complex64::new(0.0, 0.0); 4])
    }

    pub fn components(&self) -> &[Complex64; 4] {
        &self.0
    }

    pub fn infinity_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Re(v₀ + v₃): the trace of the corresponding matrix.
    pub fn trace(&self) -> f64 {
        self.0[0].re + self.0[3].re
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn scaled_complex(&self, s: Complex64) -> Self {
        Self(self.0.map(|z| z * s))
    }
}

impl std::ops::Add for LiouvilleVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self([
            self.0[0] + rhs.0[0],
            self.0[1] + rhs.0[1],
            self.0[2] + rhs.0[2],
            self.0[3] + rhs.0[3],
        ])
    }
}

impl std::ops::Sub for LiouvilleVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self([
            self.0[0] - rhs.0[0],
            self.0[1] - rhs.0[1],
            self.0[2] - rhs.0[2],
            self.0[3] - rhs.0[3],
        ])
    }
}

impl std::ops::Index<usize> for LiouvilleVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

/// Map a density matrix to its Liouville vector (ρ↑↑, ρ↑↓, ρ↓↑, ρ↓↓).
pub fn vectorize(rho: &DensityMatrix) -> LiouvilleVector {
    LiouvilleVector([rho.uu(), rho.ud(), rho.du(), rho.dd()])
}

/// Result of placing a Liouville vector back into matrix form.
///
/// Hermiticity is not required of the input; intermediate numerics may
/// break it slightly, so the deviation is reported instead of enforced.
#[derive(Debug, Clone)]
pub struct Devectorized {
    pub matrix: Array2<Complex64>,
    pub hermiticity_deviation: f64,
}

impl Devectorized {
    /// Validate the raw entries as a density matrix (exact round trip).
    pub fn into_density_matrix(self) -> Result<DensityMatrix, StateError> {
        DensityMatrix::from_matrix(&self.matrix)
    }

    /// (M + M†)/2 of the stored matrix.
    pub fn hermitian_part(&self) -> Array2<Complex64> {
        let m = &self.matrix;
        let b = (m[(0, 1)] + m[(1, 0)].conj()) / 2.0;
        array![
            [Complex64::new(m[(0, 0)].re, 0.0), b],
            [b.conj(), Complex64::new(m[(1, 1)].re, 0.0)]
        ]
    }

    /// Validate the Hermitian part as a density matrix.
    pub fn hermitian_density_matrix(&self) -> Result<DensityMatrix, StateError> {
        DensityMatrix::from_matrix(&self.hermitian_part())
    }

    pub fn trace(&self) -> f64 {
        self.matrix[(0, 0)].re + self.matrix[(1, 1)].re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = &self.matrix;
        hermitian_min_eigenvalue(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
    }
}

/// Place a Liouville vector into a 2×2 matrix and report how far the
/// input is from Hermitian.
pub fn devectorize(v: &LiouvilleVector) -> Devectorized {
    let deviation = (v[2] - v[1].conj())
        .norm()
        .max(v[0].im.abs())
        .max(v[3].im.abs());
    Devectorized {
        matrix: array![[v[0], v[1]], [v[2], v[3]]],
        hermiticity_deviation: deviation,
    }
}

/// The four reference pure states |↑⟩, |↓⟩, |±⟩ = (|↑⟩ ± |↓⟩)/√2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceState {
    Up,
    Down,
    Plus,
    Minus,
}

impl ReferenceState {
    pub fn ket(&self) -> [Complex64; 2] {
        let r = |x: f64| Complex64::new(x, 0.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Self::Up => [r(1.0), r(0.0)],
            Self::Down => [r(0.0), r(1.0)],
            Self::Plus => [r(s), r(s)],
            Self::Minus => [r(s), r(-s)],
        }
    }

    pub fn projector(&self) -> DensityMatrix {
        let [a, b] = self.ket();
        DensityMatrix::pure(a, b).expect("reference projector is a valid state")
    }
}

/// ½(|+⟩⟨+| + |−⟩⟨−|) = ½ 𝟙.
pub fn maximally_mixed() -> DensityMatrix {
    let h = Complex64::new(0.5, 0.0);
    let z = Complex64::new(0.0, 0.0);
    DensityMatrix::new(h, z, z, h).expect("maximally mixed state is valid")
}
