// Copyright 2026 hlq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Self-validation suites: every cross-cutting invariant of the library
//! bundled into named checks with a pass/fail verdict, for the CLI's
//! `validate` command and for CI-style smoke runs.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::atlas;
use crate::evolve::{
    self, integrate, Chirality, SweepConfig, Trajectory, TrajectoryKind,
};
use crate::liouvillian::{apply_generator, build_hybrid_liouvillian, Superoperator};
use crate::params::SystemParams;
use crate::spectral;
use crate::state::{vectorize, DensityMatrix, LiouvilleVector};

pub const DEFAULT_SEED: u64 = 0x5EED;

/// Verdict of one named invariant suite.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckReport {
    fn pass(name: &'static str, detail: String) -> Self {
        Self {
            name,
            passed: true,
            detail,
        }
    }

    fn fail(name: &'static str, detail: String) -> Self {
        Self {
            name,
            passed: false,
            detail,
        }
    }
}

/// Run every suite. Deterministic for a fixed seed.
pub fn run_all(seed: u64) -> Vec<CheckReport> {
    vec![
        generator_equivalence_check(seed, 1000),
        trace_law_check(seed, 1000),
        spectral_consistency_check(seed, 1000),
        atlas_cross_check(60),
        conservation_check(evolve::DEFAULT_STEPS_PER_UNIT_TIME),
    ]
}

pub fn random_params(rng: &mut impl Rng) -> SystemParams {
    SystemParams::at_unit_omega(
        rng.gen_range(0.0..3.0),
        rng.gen_range(0.0..std::f64::consts::PI),
        rng.gen_range(0.0..1.0),
    )
    .expect("sampled parameters are in range")
}

pub fn random_density(rng: &mut impl Rng) -> DensityMatrix {
    let mut g = [Complex64::new(0.0, 0.0); 4];
    for z in &mut g {
        *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    // G G† is positive semidefinite by construction
    let uu = g[0] * g[0].conj() + g[1] * g[1].conj();
    let ud = g[0] * g[2].conj() + g[1] * g[3].conj();
    let dd = g[2] * g[2].conj() + g[3] * g[3].conj();
    let t = (uu + dd).re.max(1e-9);
    let scale = rng.gen_range(0.1..1.0) / t;
    DensityMatrix::new(uu * scale, ud * scale, (ud * scale).conj(), dd * scale)
        .expect("Gram construction is a valid state")
}

/// Matrix route (4×4 superoperator) and operator route (commutators and
/// jump terms) must produce the same time derivative. The superoperator
/// is injected so the check's sensitivity is itself testable against a
/// corrupted builder.
pub fn generator_equivalence_core(
    seed: u64,
    samples: usize,
    builder: impl Fn(&SystemParams) -> Superoperator,
) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let p = random_params(&mut rng);
        let rho = random_density(&mut rng);
        let direct = apply_generator(&p, &rho);
        let via_matrix = builder(&p).apply(&vectorize(&rho));
        let diff = (LiouvilleVector([
            direct[(0, 0)],
            direct[(0, 1)],
            direct[(1, 0)],
            direct[(1, 1)],
        ]) - via_matrix)
            .infinity_norm();
        worst = worst.max(diff);
    }
    (worst, samples)
}

pub fn generator_equivalence_check(seed: u64, samples: usize) -> CheckReport {
    const NAME: &str = "generator-two-path-equivalence";
    const TOL: f64 = 1e-12;
    let (worst, n) = generator_equivalence_core(seed, samples, build_hybrid_liouvillian);
    let detail = format!("max |matrix - operator| = {worst:.3e} over {n} random inputs (tol {TOL:.0e})");
    if worst <= TOL {
        CheckReport::pass(NAME, detail)
    } else {
        CheckReport::fail(NAME, detail)
    }
}

/// d(Tr ρ)/dt = −γ(1−q)ρ↑↑ follows algebraically from the master
/// equation; it pins the sign and weight of the postselection term.
pub fn trace_law_check(seed: u64, samples: usize) -> CheckReport {
    const NAME: &str = "trace-derivative-law";
    const TOL: f64 = 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let p = random_params(&mut rng);
        let rho = random_density(&mut rng);
        let d = apply_generator(&p, &rho);
        let got = (d[(0, 0)] + d[(1, 1)]).re;
        let expected = -p.gamma() * (1.0 - p.q()) * rho.uu().re;
        worst = worst.max((got - expected).abs());
    }
    let detail = format!("max deviation {worst:.3e} over {samples} random inputs (tol {TOL:.0e})");
    if worst <= TOL {
        CheckReport::pass(NAME, detail)
    } else {
        CheckReport::fail(NAME, detail)
    }
}

/// Eigenvalues must annihilate the characteristic polynomial and come
/// in conjugate pairs (the generator preserves Hermiticity).
pub fn spectral_consistency_check(seed: u64, samples: usize) -> CheckReport {
    const NAME: &str = "spectral-consistency";
    const POLY_TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let mut worst_poly = 0.0f64;
    let mut conj_failures = 0usize;
    for _ in 0..samples {
        let p = random_params(&mut rng);
        let s = build_hybrid_liouvillian(&p);
        let cp = spectral::char_poly(&s);
        let Ok(eigs) = spectral::eigenvalues(&s) else {
            return CheckReport::fail(NAME, format!("eigen solver failed at {p:?}"));
        };
        let tol = 1e-8 * s.frobenius_norm().max(1.0);
        for e in eigs {
            worst_poly = worst_poly.max(cp.eval(e).norm());
            if !eigs.iter().any(|o| (o - e.conj()).norm() <= tol) {
                conj_failures += 1;
            }
        }
    }
    let detail = format!(
        "max |C(lambda)| = {worst_poly:.3e} (tol {POLY_TOL:.0e}); conjugation-closure failures: {conj_failures}"
    );
    if worst_poly <= POLY_TOL && conj_failures == 0 {
        CheckReport::pass(NAME, detail)
    } else {
        CheckReport::fail(NAME, detail)
    }
}

/// Analytic degeneracy branches vs the numeric scanner and classifier.
pub fn atlas_cross_check(samples: usize) -> CheckReport {
    const NAME: &str = "atlas-cross-validation";
    let v = match atlas::validate_atlas(samples) {
        Ok(v) => v,
        Err(e) => return CheckReport::fail(NAME, format!("atlas validation failed: {e}")),
    };
    let lines = match atlas::cross_validate(
        9,
        &atlas::GridSpec::new(1.1, 2.9, 7),
        &atlas::GridSpec::new(0.35 * std::f64::consts::PI, 0.65 * std::f64::consts::PI, 7),
    ) {
        Ok(c) => c,
        Err(e) => return CheckReport::fail(NAME, format!("cross-validation failed: {e}")),
    };
    let ok = v.all_agree()
        && v.max_scaled_residual <= 1e-9
        && lines.line_unmatched == 0
        && lines.line_max_dev <= 1e-6
        && lines.surface_unmatched == 0
        && lines.surface_spurious == 0
        && lines.surface_max_dev <= 1e-6
        && lines.fourth_order.len() == 1;
    let detail = format!(
        "classification agreement {}/{} line, {}/{} surface, {}/{} trivial; max residual {:.2e}; scan deviation line {:.2e} surface {:.2e}; fourth-order solutions {}{}",
        v.line_agree,
        v.line_total,
        v.surface_agree,
        v.surface_total,
        v.trivial_agree,
        v.trivial_total,
        v.max_scaled_residual,
        lines.line_max_dev,
        lines.surface_max_dev,
        lines.fourth_order.len(),
        if v.disagreements.is_empty() {
            String::new()
        } else {
            format!("; disagreements: {:?}", v.disagreements)
        }
    );
    if ok {
        CheckReport::pass(NAME, detail)
    } else {
        CheckReport::fail(NAME, detail)
    }
}

/// Hermiticity, positivity, and trace conservation along all three
/// protocol families at the published parameters.
pub fn conservation_check(steps_per_unit_time: usize) -> CheckReport {
    const NAME: &str = "evolution-conservation";
    const HERM_TOL: f64 = 1e-8;
    const EIG_TOL: f64 = -1e-8;
    const TRACE_TOL: f64 = 1e-9;
    let mut worst_herm = 0.0f64;
    let mut worst_eig = 0.0f64;
    let mut worst_trace = 0.0f64;
    for kind in [TrajectoryKind::Tilted, TrajectoryKind::Flat, TrajectoryKind::Hopping] {
        for q0 in [0.0, 0.5, 1.0] {
            let cfg = SweepConfig {
                steps_per_unit_time,
                ..SweepConfig::published_defaults(kind, Chirality::Plus)
            };
            let traj = match cfg.trajectory(q0) {
                Ok(t) => t,
                Err(e) => return CheckReport::fail(NAME, format!("trajectory: {e}")),
            };
            let r = match integrate(&traj, &cfg.initial, cfg.steps_per_unit_time) {
                Ok(r) => r,
                Err(e) => return CheckReport::fail(NAME, format!("integration: {e}")),
            };
            for s in &r.trace_history {
                worst_herm = worst_herm.max(s.hermiticity_deviation);
                worst_eig = worst_eig.min(s.min_eigenvalue());
            }
            if kind == TrajectoryKind::Flat && q0 == 1.0 {
                for s in &r.trace_history {
                    worst_trace = worst_trace.max((s.trace - 1.0).abs());
                }
            }
        }
    }
    let ok = worst_herm <= HERM_TOL && worst_eig >= EIG_TOL && worst_trace <= TRACE_TOL;
    let detail = format!(
        "max Hermiticity deviation {worst_herm:.2e} (tol {HERM_TOL:.0e}); min eigenvalue {worst_eig:.2e} (floor {EIG_TOL:.0e}); max |trace-1| at q=1 {worst_trace:.2e} (tol {TRACE_TOL:.0e})"
    );
    if ok {
        CheckReport::pass(NAME, detail)
    } else {
        CheckReport::fail(NAME, detail)
    }
}

/// Eigenvalue-gap profile along a trajectory, for adiabaticity
/// inspection. The adiabaticity condition is not enforced anywhere;
/// this only reports the gaps on request.
pub fn eigenvalue_gaps_along(
    traj: &Trajectory,
    samples: usize,
) -> Result<Vec<(f64, f64)>, spectral::SpectralError> {
    let mut out = Vec::with_capacity(samples);
    let segments = traj.segments();
    for k in 0..samples {
        let t = traj.total_time() * k as f64 / (samples.max(2) - 1) as f64;
        let seg = segments
            .iter()
            .position(|&(a, b)| t >= a && t <= b)
            .unwrap_or(0);
        let p = traj
            .params_at(seg, t)
            .expect("trajectory parameters are valid");
        let s = build_hybrid_liouvillian(&p);
        let eigs = spectral::eigenvalues(&s)?;
        let mut min_gap = f64::INFINITY;
        for i in 0..4 {
            for j in (i + 1)..4 {
                min_gap = min_gap.min((eigs[i] - eigs[j]).norm());
            }
        }
        out.push((t, min_gap));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn all_suites_pass() {
        for report in run_all(DEFAULT_SEED) {
            assert!(report.passed, "{}: {}", report.name, report.detail);
        }
    }

    #[test]
    fn equivalence_check_catches_basis_order_bug() {
        // swap the two coherence rows/columns: a classic vectorization
        // ordering mistake that every other invariant tolerates
        let corrupted = |p: &SystemParams| {
            let s = build_hybrid_liouvillian(p);
            let m = s.matrix();
            let mut w = Array2::<Complex64>::zeros((4, 4));
            let perm = [0usize, 2, 1, 3];
            for r in 0..4 {
                for c in 0..4 {
                    w[(r, c)] = m[(perm[r], perm[c])];
                }
            }
            Superoperator::from_matrix(w)
        };
        let (worst, _) = generator_equivalence_core(DEFAULT_SEED, 200, corrupted);
        assert!(
            worst > 1e-3,
            "corrupted builder must violate two-path equivalence, got {worst:.3e}"
        );
    }

    #[test]
    fn loosened_rank_tolerance_produces_flags() {
        // at a third-order EP, a rank threshold inflated by 1e6 lands
        // within a factor of 10 of a genuine singular value and the
        // classification must come back flagged rather than trusted
        let theta = atlas::line_theta(1.2).unwrap();
        let q = atlas::line_q(1.2).unwrap();
        let p = SystemParams::at_unit_omega(1.2, theta, q).unwrap();
        let s = build_hybrid_liouvillian(&p);
        let data = spectral::eigendecompose_with(
            &s,
            spectral::default_cluster_tol(&s),
            spectral::DEFAULT_RANK_TOL_FACTOR * 1e6,
        )
        .unwrap();
        assert!(
            data.clusters.iter().any(|c| c.flagged),
            "mis-tuned rank tolerance should flag, clusters: {:?}",
            data.clusters
        );
        // the default tolerance stays unflagged at the same point
        let clean = spectral::eigendecompose_with(
            &s,
            spectral::default_cluster_tol(&s),
            spectral::DEFAULT_RANK_TOL_FACTOR,
        )
        .unwrap();
        assert!(clean.clusters.iter().all(|c| !c.flagged));
    }

    #[test]
    fn gap_profile_reports_closures() {
        let traj = Trajectory::tilted(0.0, Chirality::Plus, 100.0, 1.0).unwrap();
        let gaps = eigenvalue_gaps_along(&traj, 101).unwrap();
        assert_eq!(gaps.len(), 101);
        assert!(gaps.iter().all(|(_, g)| g.is_finite()));
        // the loop crosses the trivial-degeneracy plane, so some interior
        // gap must nearly close
        let min_interior = gaps[5..96].iter().map(|(_, g)| *g).fold(f64::INFINITY, f64::min);
        assert!(min_interior < 0.5, "expected a near-closure, got {min_interior}");
    }
}
