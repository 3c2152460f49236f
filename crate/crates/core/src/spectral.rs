// Copyright 2026 hlq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Spectral analysis of 4×4 superoperators: characteristic polynomial,
//! eigenvalue clustering, and Jordan-structure classification.
//!
//! Degeneracies are told apart by counting eigenvectors: an n-th order
//! exceptional point has n coalescing eigenvectors (largest Jordan block
//! of size n), while a trivial degeneracy keeps a full eigenbasis. The
//! block sizes are recovered from the ranks of (S − λI)^k rather than an
//! explicit Jordan decomposition, which is the numerically stabler route
//! for a 4×4 matrix.

use faer::Mat;
use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

use crate::liouvillian::Superoperator;
use crate::params::SystemParams;
use crate::state::LiouvilleVector;

/// Default eigenvalue clustering tolerance, relative to the Frobenius
/// norm of the superoperator.
///
/// Defective eigenvalues computed by a backward-stable solver split by
/// roughly the p-th root of the backward error for a size-p Jordan
/// block: ~1e-5 for the third-order blocks on the degeneracy lines.
/// The factor sits an order of magnitude above that splitting and three
/// orders below the smallest eigenvalue gap along the manifolds (~0.2).
pub const DEFAULT_CLUSTER_TOL_FACTOR: f64 = 1e-4;

/// Default rank threshold, relative to the largest singular value of
/// the matrix whose rank is being decided.
pub const DEFAULT_RANK_TOL_FACTOR: f64 = 1e-8;

/// A rank decision is flagged when singular values on both sides of the
/// threshold lie within this factor of each other.
pub const ILL_CONDITIONED_BAND: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("eigenvalue solver failed: {0}")]
    EigFailed(String),
    #[error("singular value solver failed: {0}")]
    SvdFailed(String),
    #[error("polynomial derivative order {order} exceeds the degree (max 4)")]
    DerivativeOrder { order: usize },
    #[error("alpha is undefined at omega = 0; classification needs omega > 0")]
    AlphaUndefined,
}

/// Monic degree-4 characteristic polynomial Det(S − λI), stored as
/// ascending coefficients c₀..c₄ with c₄ = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharPoly {
    coeffs: [Complex64; 5],
}

impl CharPoly {
    pub fn from_coeffs(coeffs: [Complex64; 5]) -> Self {
        Self { coeffs }
    }

    /// Ascending coefficients (c₀, c₁, c₂, c₃, c₄ = 1).
    pub fn coeffs(&self) -> &[Complex64; 5] {
        &self.coeffs
    }

    pub fn eval(&self, lambda: Complex64) -> Complex64 {
        let mut acc = self.coeffs[4];
        for k in (0..4).rev() {
            acc = acc * lambda + self.coeffs[k];
        }
        acc
    }

    /// Value of the k-th derivative at λ, 0 ≤ k ≤ 4.
    pub fn derivative_at(&self, lambda: Complex64, k: usize) -> Result<Complex64, SpectralError> {
        if k > 4 {
            return Err(SpectralError::DerivativeOrder { order: k });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for j in (k..5).rev() {
            let mut fac = 1.0;
            for m in (j - k + 1)..=j {
                fac *= m as f64;
            }
            acc = acc * lambda + self.coeffs[j] * fac;
        }
        Ok(acc)
    }
}

/// Characteristic polynomial via the Faddeev–LeVerrier recurrence.
pub fn char_poly(s: &Superoperator) -> CharPoly {
    let a = s.matrix();
    let id = Array2::<Complex64>::eye(4);

    let mut m = a.clone();
    let c3 = -trace(&m);
    m = a.dot(&(&m + &id.mapv(|z| z * c3)));
    let c2 = -trace(&m) / 2.0;
    m = a.dot(&(&m + &id.mapv(|z| z * c2)));
    let c1 = -trace(&m) / 3.0;
    m = a.dot(&(&m + &id.mapv(|z| z * c1)));
    let c0 = -trace(&m) / 4.0;

    CharPoly::from_coeffs([c0, c1, c2, c3, Complex64::new(1.0, 0.0)])
}

fn trace(m: &Array2<Complex64>) -> Complex64 {
    m[(0, 0)] + m[(1, 1)] + m[(2, 2)] + m[(3, 3)]
}

/// All four eigenvalues, sorted by (re, im) for determinism.
pub fn eigenvalues(s: &Superoperator) -> Result<[Complex64; 4], SpectralError> {
    let m = to_faer(s.matrix());
    let mut ev: Vec<Complex64> = m
        .eigenvalues()
        .map_err(|e| SpectralError::EigFailed(format!("{e:?}")))?;
    ev.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).expect("finite eigenvalues"));
    Ok([ev[0], ev[1], ev[2], ev[3]])
}

fn to_faer(m: &Array2<Complex64>) -> Mat<Complex64> {
    Mat::from_fn(4, 4, |r, c| m[(r, c)])
}

/// Singular values (descending) and the right singular basis.
fn svd4(m: &Array2<Complex64>) -> Result<([f64; 4], Mat<Complex64>), SpectralError> {
    let svd = to_faer(m)
        .svd()
        .map_err(|e| SpectralError::SvdFailed(format!("{e:?}")))?;
    let sv = svd.S().column_vector().to_owned();
    let mut out = [0.0; 4];
    for (k, o) in out.iter_mut().enumerate() {
        *o = sv[k].re;
    }
    Ok((out, svd.V().to_owned()))
}

/// One eigenvalue cluster with its multiplicities and Jordan structure.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenCluster {
    /// Mean of the clustered eigenvalues; first-order splitting of a
    /// defective eigenvalue cancels in the mean, so this is the best
    /// available estimate of the degenerate eigenvalue.
    pub mean: Complex64,
    /// Indices into `SpectralData::eigenvalues`.
    pub members: Vec<usize>,
    pub algebraic: usize,
    pub geometric: usize,
    /// Jordan block sizes, descending; their sum equals `algebraic`.
    pub jordan_blocks: Vec<usize>,
    /// rank((S − λ̄I)^k) for k = 0..=4.
    pub rank_sequence: [usize; 5],
    /// Set when some rank decision had singular values straddling the
    /// threshold within [`ILL_CONDITIONED_BAND`]; such a classification
    /// is reported rather than trusted.
    pub flagged: bool,
}

/// Eigen-structure of a superoperator.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub eigenvalues: [Complex64; 4],
    /// Independent eigenvectors, cluster by cluster (up to 4 in total).
    pub eigenvectors: Vec<LiouvilleVector>,
    pub clusters: Vec<EigenCluster>,
}

/// Eigendecompose with the default rank threshold.
pub fn eigendecompose(s: &Superoperator, cluster_tol: f64) -> Result<SpectralData, SpectralError> {
    eigendecompose_with(s, cluster_tol, DEFAULT_RANK_TOL_FACTOR)
}

/// Cluster tolerance appropriate for `s` under the default factor.
pub fn default_cluster_tol(s: &Superoperator) -> f64 {
    DEFAULT_CLUSTER_TOL_FACTOR * s.frobenius_norm().max(1e-300)
}

/// Eigendecompose `s`, clustering eigenvalues at pairwise distance
/// ≤ `cluster_tol` and deciding ranks at `rank_tol` × (largest singular
/// value).
pub fn eigendecompose_with(
    s: &Superoperator,
    cluster_tol: f64,
    rank_tol: f64,
) -> Result<SpectralData, SpectralError> {
    let eigs = eigenvalues(s)?;
    let groups = cluster_indices(&eigs, cluster_tol);

    let mut clusters = Vec::with_capacity(groups.len());
    let mut eigenvectors = Vec::new();
    for members in groups {
        let algebraic = members.len();
        let mean = members.iter().map(|&k| eigs[k]).sum::<Complex64>() / algebraic as f64;
        let shifted = s.matrix() - &Array2::<Complex64>::eye(4).mapv(|z| z * mean);

        let mut rank_sequence = [4usize; 5];
        let mut flagged = false;
        let mut power = Array2::<Complex64>::eye(4);
        let mut sigma_max_shifted = 0.0;
        for k in 1..=4 {
            power = power.dot(&shifted);
            if rank_sequence[k - 1] == 4 - algebraic {
                // rank already stabilized; powers can only keep it
                rank_sequence[k] = rank_sequence[k - 1];
                continue;
            }
            let (sv, v) = svd4(&power)?;
            if k == 1 {
                sigma_max_shifted = sv[0];
            }
            // the k-th power of a numerically nilpotent direction decays
            // like σ_max(A)^k, so the cut must scale the same way; a
            // threshold relative to σ_max(A^k) itself would never let a
            // power reach rank zero
            let threshold = rank_tol * sigma_max_shifted.powi(k as i32);
            let (rank, ill) = decide_rank(&sv, threshold);
            flagged |= ill;
            rank_sequence[k] = rank.min(rank_sequence[k - 1]);
            if k == 1 {
                // null-space basis = right singular vectors of the
                // smallest singular values
                for col in rank..4 {
                    eigenvectors.push(LiouvilleVector([
                        v[(0, col)],
                        v[(1, col)],
                        v[(2, col)],
                        v[(3, col)],
                    ]));
                }
            }
        }

        let geometric = rank_sequence[0] - rank_sequence[1];
        let mut jordan_blocks = Vec::new();
        for size in 1..=4usize {
            let ge_size = rank_sequence[size - 1] - rank_sequence[size];
            let ge_next = if size < 4 {
                rank_sequence[size] - rank_sequence[size + 1]
            } else {
                0
            };
            for _ in 0..ge_size.saturating_sub(ge_next) {
                jordan_blocks.push(size);
            }
        }
        jordan_blocks.sort_unstable_by(|a, b| b.cmp(a));
        if jordan_blocks.iter().sum::<usize>() != algebraic {
            // rank sequence inconsistent with the cluster size
            flagged = true;
        }

        clusters.push(EigenCluster {
            mean,
            members,
            algebraic,
            geometric,
            jordan_blocks,
            rank_sequence,
            flagged,
        });
    }

    Ok(SpectralData {
        eigenvalues: eigs,
        eigenvectors,
        clusters,
    })
}

/// Single-linkage clustering of 4 eigenvalues.
fn cluster_indices(eigs: &[Complex64; 4], tol: f64) -> Vec<Vec<usize>> {
    let mut parent = [0usize, 1, 2, 3];
    fn find(parent: &mut [usize; 4], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            if (eigs[i] - eigs[j]).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..4 {
        let root = find(&mut parent, i);
        if let Some(g) = groups.iter_mut().find(|g| find(&mut parent, g[0]) == root) {
            g.push(i);
        } else {
            groups.push(vec![i]);
        }
    }
    groups
}

/// Rank = number of singular values above the absolute `threshold`,
/// along with an ill-conditioning indicator: any singular value within
/// a factor [`ILL_CONDITIONED_BAND`] of the threshold means a small
/// perturbation could flip the decision.
fn decide_rank(sv: &[f64; 4], threshold: f64) -> (usize, bool) {
    if sv[0] <= 0.0 {
        return (0, false);
    }
    let rank = sv.iter().filter(|&&s| s > threshold).count();
    let ill = sv
        .iter()
        .any(|&s| s > threshold / ILL_CONDITIONED_BAND && s < threshold * ILL_CONDITIONED_BAND);
    (rank, ill)
}

/// How a degenerate eigenvalue is classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// n eigenvectors coalesce (largest Jordan block of size n ≥ 2).
    ExceptionalPoint { order: usize },
    /// Eigenvalues coincide but the eigenvectors stay independent.
    Trivial,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::ExceptionalPoint { order } => write!(f, "ep{order}"),
            Self::Trivial => write!(f, "trivial"),
        }
    }
}

/// A located degeneracy of the superoperator.
#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyRecord {
    pub alpha: f64,
    pub theta: f64,
    pub q: f64,
    pub eigenvalue: Complex64,
    /// Algebraic multiplicity (≥ 2).
    pub order: usize,
    pub largest_block: usize,
    pub classification: Classification,
    pub flagged: bool,
}

/// Classify every degenerate eigenvalue cluster of the superoperator at
/// `p`. `cluster_tol` is absolute; `rank_tol` is relative to the largest
/// singular value of each power.
pub fn classify_degeneracy(
    p: &SystemParams,
    cluster_tol: f64,
    rank_tol: f64,
) -> Result<Vec<DegeneracyRecord>, SpectralError> {
    let alpha = p.alpha().ok_or(SpectralError::AlphaUndefined)?;
    let s = crate::liouvillian::build_hybrid_liouvillian(p);
    let data = eigendecompose_with(&s, cluster_tol, rank_tol)?;
    let mut records = Vec::new();
    for cluster in &data.clusters {
        if cluster.algebraic < 2 {
            continue;
        }
        let largest_block = cluster.jordan_blocks.first().copied().unwrap_or(1);
        let classification = if largest_block >= 2 {
            Classification::ExceptionalPoint {
                order: largest_block,
            }
        } else {
            Classification::Trivial
        };
        records.push(DegeneracyRecord {
            alpha,
            theta: p.theta(),
            q: p.q(),
            eigenvalue: cluster.mean,
            order: cluster.algebraic,
            largest_block,
            classification,
            flagged: cluster.flagged,
        });
    }
    Ok(records)
}

/// Classification with the default tolerances.
pub fn classify_degeneracy_default(
    p: &SystemParams,
) -> Result<Vec<DegeneracyRecord>, SpectralError> {
    let s = crate::liouvillian::build_hybrid_liouvillian(p);
    classify_degeneracy(p, default_cluster_tol(&s), DEFAULT_RANK_TOL_FACTOR)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouvillian::build_hybrid_liouvillian;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn char_poly_of_zero_matrix() {
        let s = Superoperator::from_matrix(Array2::zeros((4, 4)));
        let p = char_poly(&s);
        for k in 0..4 {
            assert_abs_diff_eq!(p.coeffs()[k].norm(), 0.0, epsilon = 1e-15);
        }
        assert_eq!(p.coeffs()[4], c(1.0, 0.0));
    }

    #[test]
    fn char_poly_of_diagonal_matrix() {
        // (λ+1)(λ+2)(λ+3)(λ+4) = λ⁴ + 10λ³ + 35λ² + 50λ + 24
        let mut m = Array2::zeros((4, 4));
        for (k, d) in [-1.0, -2.0, -3.0, -4.0].iter().enumerate() {
            m[(k, k)] = c(*d, 0.0);
        }
        let p = char_poly(&Superoperator::from_matrix(m));
        let expected = [24.0, 50.0, 35.0, 10.0, 1.0];
        for k in 0..5 {
            assert_abs_diff_eq!(p.coeffs()[k].re, expected[k], epsilon = 1e-12);
            assert_abs_diff_eq!(p.coeffs()[k].im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn char_poly_at_fourth_order_degeneracy() {
        // α = 1, θ = π/2, q = 0 at ω = 1: (λ+1)⁴ = λ⁴ + 4λ³ + 6λ² + 4λ + 1
        let p = SystemParams::at_unit_omega(1.0, FRAC_PI_2, 0.0).unwrap();
        let cp = char_poly(&build_hybrid_liouvillian(&p));
        let expected = [1.0, 4.0, 6.0, 4.0, 1.0];
        for k in 0..5 {
            assert_abs_diff_eq!(cp.coeffs()[k].re, expected[k], epsilon = 1e-12);
            assert_abs_diff_eq!(cp.coeffs()[k].im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn poly_derivatives() {
        // λ⁴: derivatives at 0
        let z = c(0.0, 0.0);
        let p = CharPoly::from_coeffs([z, z, z, z, c(1.0, 0.0)]);
        assert_abs_diff_eq!(p.derivative_at(c(0.0, 0.0), 0).unwrap().norm(), 0.0);
        assert_abs_diff_eq!(p.derivative_at(c(0.0, 0.0), 3).unwrap().norm(), 0.0);
        assert_abs_diff_eq!(p.derivative_at(c(0.0, 0.0), 4).unwrap().re, 24.0);
        // (λ+1)⁴ at λ = −1: C⁗ = 4! everywhere
        let p = CharPoly::from_coeffs([c(1.0, 0.0), c(4.0, 0.0), c(6.0, 0.0), c(4.0, 0.0), c(1.0, 0.0)]);
        assert_abs_diff_eq!(p.derivative_at(c(-1.0, 0.0), 4).unwrap().re, 24.0);
        for k in 0..4 {
            assert_abs_diff_eq!(p.derivative_at(c(-1.0, 0.0), k).unwrap().norm(), 0.0, epsilon = 1e-12);
        }
        assert!(p.derivative_at(c(0.0, 0.0), 5).is_err());
    }

    #[test]
    fn fourth_order_point_has_jordan_blocks_3_1() {
        let p = SystemParams::at_unit_omega(1.0, FRAC_PI_2, 0.0).unwrap();
        let s = build_hybrid_liouvillian(&p);
        let data = eigendecompose(&s, default_cluster_tol(&s)).unwrap();
        assert_eq!(data.clusters.len(), 1);
        let cl = &data.clusters[0];
        assert_abs_diff_eq!((cl.mean - c(-1.0, 0.0)).norm(), 0.0, epsilon = 1e-6);
        assert_eq!(cl.algebraic, 4);
        assert_eq!(cl.geometric, 2);
        assert_eq!(cl.jordan_blocks, vec![3, 1]);
        assert_eq!(&cl.rank_sequence[1..4], &[2, 1, 0]);
        assert!(!cl.flagged);
        assert_eq!(data.eigenvectors.len(), 2);
    }

    #[test]
    fn trivial_degeneracy_has_two_eigenvectors() {
        // α = 2, θ = π/2, q = 0: double eigenvalue −γ/2 = −2 with a full
        // eigenbasis (trivial crossing of the two coherence modes).
        let p = SystemParams::at_unit_omega(2.0, FRAC_PI_2, 0.0).unwrap();
        let s = build_hybrid_liouvillian(&p);
        let data = eigendecompose(&s, default_cluster_tol(&s)).unwrap();
        let cl = data
            .clusters
            .iter()
            .find(|cl| cl.algebraic == 2)
            .expect("double eigenvalue");
        assert_abs_diff_eq!((cl.mean - c(-2.0, 0.0)).norm(), 0.0, epsilon = 1e-9);
        assert_eq!(cl.geometric, 2);
        assert_eq!(cl.jordan_blocks, vec![1, 1]);
    }

    #[test]
    fn generic_point_has_four_simple_eigenvalues() {
        let p = SystemParams::at_unit_omega(0.5, 1.0, 0.5).unwrap();
        let s = build_hybrid_liouvillian(&p);
        let data = eigendecompose(&s, default_cluster_tol(&s)).unwrap();
        assert_eq!(data.clusters.len(), 4);
        assert!(data.clusters.iter().all(|cl| cl.algebraic == 1));
        assert_eq!(data.eigenvectors.len(), 4);
    }

    #[test]
    fn classify_at_fourth_order_point() {
        let p = SystemParams::at_unit_omega(1.0, FRAC_PI_2, 0.0).unwrap();
        let recs = classify_degeneracy_default(&p).unwrap();
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert_eq!(r.order, 4);
        assert_eq!(r.largest_block, 3);
        assert_eq!(r.classification, Classification::ExceptionalPoint { order: 3 });
        assert!(!r.flagged);
    }

    #[test]
    fn classify_trivial_point() {
        let p = SystemParams::at_unit_omega(2.0, FRAC_PI_2, 0.0).unwrap();
        let recs = classify_degeneracy_default(&p).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].order, 2);
        assert_eq!(recs[0].classification, Classification::Trivial);
    }

    #[test]
    fn classify_generic_point_is_empty() {
        let p = SystemParams::at_unit_omega(0.5, 1.0, 0.5).unwrap();
        assert!(classify_degeneracy_default(&p).unwrap().is_empty());
    }

    #[test]
    fn classify_requires_positive_omega() {
        let p = SystemParams::new(0.0, 1.0, 1.0, 0.5).unwrap();
        assert_eq!(
            classify_degeneracy(&p, 1e-4, 1e-8).unwrap_err(),
            SpectralError::AlphaUndefined
        );
    }

    #[test]
    fn eigenvalues_satisfy_char_poly_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let p = SystemParams::at_unit_omega(
                rng.gen_range(0.0..3.0),
                rng.gen_range(0.0..PI),
                rng.gen_range(0.0..1.0),
            )
            .unwrap();
            let s = build_hybrid_liouvillian(&p);
            let cp = char_poly(&s);
            for e in eigenvalues(&s).unwrap() {
                assert!(
                    cp.eval(e).norm() <= 1e-9,
                    "char poly residual {:.2e} at {p:?}",
                    cp.eval(e).norm()
                );
            }
        }
    }

    #[test]
    fn rank_sequence_is_monotone_and_stabilizes() {
        let points = [
            (1.0, FRAC_PI_2, 0.0),
            (2.0, FRAC_PI_2, 0.0),
            (1.2, 1.4647501268444516, 0.13389182125816354),
            (0.5, 1.0, 0.5),
        ];
        for (alpha, theta, q) in points {
            let p = SystemParams::at_unit_omega(alpha, theta, q).unwrap();
            let s = build_hybrid_liouvillian(&p);
            let data = eigendecompose(&s, default_cluster_tol(&s)).unwrap();
            for cl in &data.clusters {
                for k in 1..=4 {
                    assert!(cl.rank_sequence[k] <= cl.rank_sequence[k - 1]);
                }
                assert_eq!(cl.rank_sequence[4], 4 - cl.algebraic);
                assert_eq!(cl.geometric, cl.jordan_blocks.len());
                assert_eq!(cl.jordan_blocks.iter().sum::<usize>(), cl.algebraic);
            }
            let total: usize = data.clusters.iter().map(|cl| cl.algebraic).sum();
            assert_eq!(total, 4);
        }
    }

    #[test]
    fn eigenvectors_are_null_vectors() {
        let p = SystemParams::at_unit_omega(1.0, FRAC_PI_2, 0.0).unwrap();
        let s = build_hybrid_liouvillian(&p);
        let data = eigendecompose(&s, default_cluster_tol(&s)).unwrap();
        let lam = data.clusters[0].mean;
        for v in &data.eigenvectors {
            let image = s.apply(v);
            let residual = (image - v.scaled_complex(lam)).infinity_norm();
            assert!(residual < 1e-7, "eigenvector residual {residual:.2e}");
        }
    }

    #[test]
    fn ill_conditioned_rank_is_flagged() {
        // singular values straddling the threshold within a factor of 10
        let sv = [1.0, 5e-8, 3e-8, 1e-12];
        let (rank, ill) = decide_rank(&sv, 4e-8);
        assert_eq!(rank, 2);
        assert!(ill);
        let sv = [1.0, 1e-2, 1e-13, 1e-14];
        let (rank, ill) = decide_rank(&sv, 1e-8);
        assert_eq!(rank, 2);
        assert!(!ill);
        // numerically zero power: everything below threshold
        let sv = [3e-16, 1e-16, 0.0, 0.0];
        let (rank, _) = decide_rank(&sv, 1e-8);
        assert_eq!(rank, 0);
    }

    #[test]
    fn cluster_tolerance_separates_and_merges() {
        let eigs = [c(0.0, 0.0), c(1e-6, 0.0), c(0.5, 0.0), c(0.5 + 2e-7, 0.0)];
        let groups = cluster_indices(&eigs, 1e-5);
        assert_eq!(groups.len(), 2);
        let groups = cluster_indices(&eigs, 1e-8);
        assert_eq!(groups.len(), 4);
    }

    #[test]
    fn char_poly_coefficients_are_real_for_physical_generators() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let p = SystemParams::at_unit_omega(
                rng.gen_range(0.0..3.0),
                rng.gen_range(0.0..PI),
                rng.gen_range(0.0..1.0),
            )
            .unwrap();
            let cp = char_poly(&build_hybrid_liouvillian(&p));
            for k in 0..5 {
                assert!(cp.coeffs()[k].im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn multiplication_by_scalar_keeps_eigenvector() {
        // LiouvilleVector scaled by complex eigenvalue helper sanity
        let v = LiouvilleVector([c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)]);
        let w = v.scaled(2.0);
        assert_eq!(w[0], c(2.0, 0.0));
        let m = array![
            [c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]
        ];
        let s = Superoperator::from_matrix(m);
        assert_eq!(s.apply(&v), w);
    }
}
