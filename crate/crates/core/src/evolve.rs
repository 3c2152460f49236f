// Copyright 2026 hlq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Time-dependent integration of the master equation along the three
//! state-conversion protocol families, with conversion-fidelity and
//! postselection-probability metrics.
//!
//! All three families encircle the central part of the degeneracy
//! structure in (α, θ, q) space over a total time T:
//!
//! * tilted — α(t) = A sin²(πt/T), θ(t) = π/2 − (3/2) sin(2πχt/T),
//!   q(t) = q₀ sin²(πt/T); starts and ends at (0, π/2, 0).
//! * flat — same α, θ schedules with q ≡ q₀.
//! * hopping — adiabatic θ ramps at α = α_i, q = 0 for t ∈ [0, T₁] and
//!   [T₁+T₂, T], with a relaxation-dominated hold at (α_ii, π/2, q₀) in
//!   between; the parameter jumps at T₁ and T₁+T₂ are instantaneous
//!   (the state carries over unchanged).
//!
//! Integration is a classical fixed-step fourth-order Runge–Kutta on
//! the vectorized linear system v̇ = S(t)·v, split exactly at the hop
//! times so no step straddles a discontinuity. Fixed stepping keeps
//! runs bit-reproducible; a step-halving check pins the accuracy.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::liouvillian::build_hybrid_liouvillian;
use crate::params::{ParamError, SystemParams};
use crate::state::{
    devectorize, vectorize, DensityMatrix, Devectorized, LiouvilleVector, ReferenceState,
    StateError,
};

pub const DEFAULT_STEPS_PER_UNIT_TIME: usize = 1000;
pub const MIN_STEPS_PER_UNIT_TIME: usize = 100;
/// Default α amplitude of the tilted/flat schedules.
pub const DEFAULT_ALPHA_MAX: f64 = 3.0;
/// Trace above 1 + this is an integration fault.
pub const TRACE_FAULT_TOL: f64 = 1e-6;
/// Hermiticity deviation above this is an integration fault.
pub const HERMITICITY_FAULT_TOL: f64 = 1e-6;
/// Local truncation error is estimated by step-doubling every this many
/// steps; the estimate is diagnostic, not used for step control.
const LOCAL_ERROR_STRIDE: usize = 64;

/// Published protocol parameters: ω = 1, T = 100 with T₁ = 0.2T,
/// T₂ = 0.6T, α_i = 1e−5, α_ii = 10 for the hopping family.
pub mod protocol_defaults {
    pub const OMEGA: f64 = 1.0;
    pub const TOTAL_TIME: f64 = 100.0;
    pub const T1: f64 = 20.0;
    pub const T2: f64 = 60.0;
    pub const ALPHA_I: f64 = 1e-5;
    pub const ALPHA_II: f64 = 10.0;
}

#[derive(Debug, Clone, Error)]
pub enum EvolveError {
    #[error("{name} = {value} is outside the valid range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("integration fault at t = {t}: {kind} ({magnitude:.3e}); this signals a bug or too-coarse stepping")]
    IntegrationFault {
        t: f64,
        kind: FaultKind,
        magnitude: f64,
    },
    #[error("normalized fidelity is undefined: surviving probability is {probability}")]
    UndefinedFidelity { probability: f64 },
    #[error("the {0:?} family has no closed-form schedule; use a concrete family or a custom sampler")]
    UnsupportedKind(TrajectoryKind),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("q0 = {q0}: {source}")]
    AtQ0 {
        q0: f64,
        #[source]
        source: Box<EvolveError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    TraceExceedsUnity,
    HermiticityViolation,
    NonFinite,
}

impl std::fmt::Display for FaultKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::TraceExceedsUnity => "trace exceeds 1",
            Self::HermiticityViolation => "Hermiticity violated",
            Self::NonFinite => "state is not finite",
        })
    }
}

/// Winding direction of the control loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chirality {
    /// χ = +1; converts toward |+⟩.
    Plus,
    /// χ = −1; converts toward |−⟩.
    Minus,
}

impl Chirality {
    pub fn sign(&self) -> f64 {
        match self {
            Self::Plus => 1.0,
            Self::Minus => -1.0,
        }
    }

    /// The pure state this winding converts into.
    pub fn target(&self) -> ReferenceState {
        match self {
            Self::Plus => ReferenceState::Plus,
            Self::Minus => ReferenceState::Minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryKind {
    Tilted,
    Flat,
    Hopping,
    Custom,
}

impl std::fmt::Display for TrajectoryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Tilted => "tilted",
            Self::Flat => "flat",
            Self::Hopping => "hopping",
            Self::Custom => "custom",
        })
    }
}

/// Instantaneous control values (α, θ, q).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Control {
    pub alpha: f64,
    pub theta: f64,
    pub q: f64,
}

type Sampler = Arc<dyn Fn(f64) -> Control + Send + Sync>;

#[derive(Clone)]
enum Schedule {
    Tilted { q0: f64, alpha_max: f64 },
    Flat { q0: f64, alpha_max: f64 },
    Hopping {
        q0: f64,
        t1: f64,
        t2: f64,
        alpha_i: f64,
        alpha_ii: f64,
    },
    Custom { sampler: Sampler, hops: Vec<f64> },
}

/// A closed control loop t ∈ [0, T] ↦ (α, θ, q), continuous except at
/// declared hop times.
#[derive(Clone)]
pub struct Trajectory {
    schedule: Schedule,
    chi: Chirality,
    total_time: f64,
    omega: f64,
}

impl std::fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Trajectory")
            .field("kind", &self.kind())
            .field("chi", &self.chi)
            .field("total_time", &self.total_time)
            .field("omega", &self.omega)
            .finish()
    }
}

fn check(name: &'static str, value: f64, ok: bool, range: &'static str) -> Result<(), EvolveError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(EvolveError::OutOfRange { name, value, range })
    }
}

impl Trajectory {
    /// Tilted loop: starts at (0, π/2, 0), reaches (α_max, π/2, q₀) at
    /// the midpoint, postselection ramped with sin²(πt/T).
    pub fn tilted(q0: f64, chi: Chirality, total_time: f64, omega: f64) -> Result<Self, EvolveError> {
        Self::tilted_with_amplitude(q0, chi, total_time, omega, DEFAULT_ALPHA_MAX)
    }

    pub fn tilted_with_amplitude(
        q0: f64,
        chi: Chirality,
        total_time: f64,
        omega: f64,
        alpha_max: f64,
    ) -> Result<Self, EvolveError> {
        check_common(q0, total_time, omega)?;
        check("alpha_max", alpha_max, alpha_max >= 0.0, "[0, inf)")?;
        Ok(Self {
            schedule: Schedule::Tilted { q0, alpha_max },
            chi,
            total_time,
            omega,
        })
    }

    /// Flat loop: same α, θ schedules as tilted with q pinned at q₀.
    pub fn flat(q0: f64, chi: Chirality, total_time: f64, omega: f64) -> Result<Self, EvolveError> {
        Self::flat_with_amplitude(q0, chi, total_time, omega, DEFAULT_ALPHA_MAX)
    }

    pub fn flat_with_amplitude(
        q0: f64,
        chi: Chirality,
        total_time: f64,
        omega: f64,
        alpha_max: f64,
    ) -> Result<Self, EvolveError> {
        check_common(q0, total_time, omega)?;
        check("alpha_max", alpha_max, alpha_max >= 0.0, "[0, inf)")?;
        Ok(Self {
            schedule: Schedule::Flat { q0, alpha_max },
            chi,
            total_time,
            omega,
        })
    }

    /// Hopping loop with instantaneous parameter jumps at T₁ and T₁+T₂;
    /// total time 2T₁ + T₂.
    pub fn hopping(
        q0: f64,
        chi: Chirality,
        t1: f64,
        t2: f64,
        alpha_i: f64,
        alpha_ii: f64,
        omega: f64,
    ) -> Result<Self, EvolveError> {
        let total_time = 2.0 * t1 + t2;
        check_common(q0, total_time, omega)?;
        check("T1", t1, t1 > 0.0, "(0, inf)")?;
        check("T2", t2, t2 > 0.0, "(0, inf)")?;
        check("alpha_i", alpha_i, alpha_i >= 0.0, "[0, inf)")?;
        check("alpha_ii", alpha_ii, alpha_ii > 0.0, "(0, inf)")?;
        Ok(Self {
            schedule: Schedule::Hopping {
                q0,
                t1,
                t2,
                alpha_i,
                alpha_ii,
            },
            chi,
            total_time,
            omega,
        })
    }

    /// Arbitrary sampler with declared discontinuity times.
    pub fn custom(
        sampler: impl Fn(f64) -> Control + Send + Sync + 'static,
        hops: Vec<f64>,
        chi: Chirality,
        total_time: f64,
        omega: f64,
    ) -> Result<Self, EvolveError> {
        check("total_time", total_time, total_time > 0.0, "(0, inf)")?;
        check("omega", omega, omega > 0.0, "(0, inf)")?;
        for &h in &hops {
            check("hop time", h, h > 0.0 && h < total_time, "(0, T)")?;
        }
        let mut sorted = hops.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self {
            schedule: Schedule::Custom {
                sampler: Arc::new(sampler),
                hops: sorted,
            },
            chi,
            total_time,
            omega,
        })
    }

    pub fn kind(&self) -> TrajectoryKind {
        match self.schedule {
            Schedule::Tilted { .. } => TrajectoryKind::Tilted,
            Schedule::Flat { .. } => TrajectoryKind::Flat,
            Schedule::Hopping { .. } => TrajectoryKind::Hopping,
            Schedule::Custom { .. } => TrajectoryKind::Custom,
        }
    }

    pub fn q0(&self) -> f64 {
        match self.schedule {
            Schedule::Tilted { q0, .. }
            | Schedule::Flat { q0, .. }
            | Schedule::Hopping { q0, .. } => q0,
            Schedule::Custom { .. } => f64::NAN,
        }
    }

    pub fn chi(&self) -> Chirality {
        self.chi
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Declared discontinuity times, ascending.
    pub fn hop_times(&self) -> Vec<f64> {
        match &self.schedule {
            Schedule::Hopping { t1, t2, .. } => vec![*t1, *t1 + *t2],
            Schedule::Custom { hops, .. } => hops.clone(),
            _ => Vec::new(),
        }
    }

    /// Closed integration segments between hops.
    pub fn segments(&self) -> Vec<(f64, f64)> {
        let mut bounds = vec![0.0];
        bounds.extend(self.hop_times());
        bounds.push(self.total_time);
        bounds.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Control values at time `t` sampled from segment `segment`'s
    /// formula. Each segment's schedule extends continuously to its
    /// closure, which fixes the values used exactly at hop times.
    pub fn control_at(&self, segment: usize, t: f64) -> Control {
        let chi = self.chi.sign();
        let tt = self.total_time;
        match &self.schedule {
            Schedule::Tilted { q0, alpha_max } => {
                let s = (std::f64::consts::PI * t / tt).sin().powi(2);
                Control {
                    alpha: alpha_max * s,
                    theta: std::f64::consts::FRAC_PI_2
                        - 1.5 * (2.0 * std::f64::consts::PI * chi * t / tt).sin(),
                    q: q0 * s,
                }
            }
            Schedule::Flat { q0, alpha_max } => {
                let s = (std::f64::consts::PI * t / tt).sin().powi(2);
                Control {
                    alpha: alpha_max * s,
                    theta: std::f64::consts::FRAC_PI_2
                        - 1.5 * (2.0 * std::f64::consts::PI * chi * t / tt).sin(),
                    q: *q0,
                }
            }
            Schedule::Hopping {
                q0,
                t1,
                alpha_i,
                alpha_ii,
                ..
            } => match segment {
                0 => Control {
                    alpha: *alpha_i,
                    theta: std::f64::consts::FRAC_PI_2 * (1.0 - chi * t / t1),
                    q: 0.0,
                },
                1 => Control {
                    alpha: *alpha_ii,
                    theta: std::f64::consts::FRAC_PI_2,
                    q: *q0,
                },
                _ => Control {
                    alpha: *alpha_i,
                    theta: std::f64::consts::FRAC_PI_2 * (1.0 - chi * (t - tt) / t1),
                    q: 0.0,
                },
            },
            Schedule::Custom { sampler, .. } => sampler(t),
        }
    }

    /// System parameters at (segment, t), converting α to γ = 2ωα.
    pub fn params_at(&self, segment: usize, t: f64) -> Result<SystemParams, ParamError> {
        let c = self.control_at(segment, t);
        SystemParams::from_alpha(self.omega, c.alpha, c.theta, c.q)
    }
}

fn check_common(q0: f64, total_time: f64, omega: f64) -> Result<(), EvolveError> {
    check("q0", q0, (0.0..=1.0).contains(&q0), "[0, 1]")?;
    check("total_time", total_time, total_time > 0.0, "(0, inf)")?;
    check("omega", omega, omega > 0.0, "(0, inf)")
}

/// One row of the sampled state history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub trace: f64,
    pub rho_uu: f64,
    pub re_rho_ud: f64,
    pub im_rho_ud: f64,
    pub rho_dd: f64,
    /// How far the raw vector is from Hermitian at this step.
    pub hermiticity_deviation: f64,
}

impl TraceSample {
    /// Smallest eigenvalue of the Hermitian part of the sampled state.
    pub fn min_eigenvalue(&self) -> f64 {
        let mid = 0.5 * (self.rho_uu + self.rho_dd);
        let rad = (0.5 * (self.rho_uu - self.rho_dd)).hypot(self.re_rho_ud.hypot(self.im_rho_ud));
        mid - rad
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StepDiagnostics {
    pub steps: usize,
    /// Largest step-doubling estimate of the local truncation error.
    pub max_local_error: f64,
}

/// Outcome of one integration.
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    /// ρ(T) as computed, with its Hermiticity deviation; PSD and trace
    /// bounds are enforced up to the fault tolerances, not the stricter
    /// construction tolerances of [`DensityMatrix`].
    pub final_state: Devectorized,
    pub trace_history: Vec<TraceSample>,
    /// Normalized overlap with |+⟩⟨+|; `None` when no probability survives.
    pub fidelity_plus: Option<f64>,
    /// Normalized overlap with |−⟩⟨−|; `None` when no probability survives.
    pub fidelity_minus: Option<f64>,
    /// P = Tr ρ(T), the probability that a run survives postselection.
    pub probability: f64,
    pub diagnostics: StepDiagnostics,
}

impl EvolutionResult {
    /// History decimated to at most `max_rows` rows (endpoints kept).
    pub fn decimated_history(&self, max_rows: usize) -> Vec<TraceSample> {
        let n = self.trace_history.len();
        if n <= max_rows || max_rows < 2 {
            return self.trace_history.clone();
        }
        let stride = n.div_ceil(max_rows);
        let mut out: Vec<TraceSample> = self.trace_history.iter().step_by(stride).copied().collect();
        if out.last().map(|s| s.t) != self.trace_history.last().map(|s| s.t) {
            out.push(*self.trace_history.last().expect("nonempty history"));
        }
        out
    }
}

/// One classical RK4 step with explicit stage times, so segment
/// endpoints are hit exactly (a `t + h` endpoint computed in floating
/// point can overshoot the segment by an ulp and leave the schedule's
/// domain).
fn rk4_step(
    traj: &Trajectory,
    segment: usize,
    stage_times: (f64, f64, f64),
    h: f64,
    v: &LiouvilleVector,
) -> Result<LiouvilleVector, ParamError> {
    let (t0, tm, t1) = stage_times;
    let s0 = build_hybrid_liouvillian(&traj.params_at(segment, t0)?);
    let sm = build_hybrid_liouvillian(&traj.params_at(segment, tm)?);
    let s1 = build_hybrid_liouvillian(&traj.params_at(segment, t1)?);
    let k1 = s0.apply(v);
    let k2 = sm.apply(&(*v + k1.scaled(h / 2.0)));
    let k3 = sm.apply(&(*v + k2.scaled(h / 2.0)));
    let k4 = s1.apply(&(*v + k3.scaled(h)));
    Ok(*v + (k1 + k2.scaled(2.0) + k3.scaled(2.0) + k4).scaled(h / 6.0))
}

/// Integrate v̇ = S(t)·v with fixed-step RK4, splitting exactly at the
/// declared hop times. Faults on trace growth beyond 1 + 1e−6 or a
/// Hermiticity deviation beyond 1e−6.
pub fn integrate(
    traj: &Trajectory,
    rho_initial: &DensityMatrix,
    steps_per_unit_time: usize,
) -> Result<EvolutionResult, EvolveError> {
    if steps_per_unit_time < MIN_STEPS_PER_UNIT_TIME {
        return Err(EvolveError::OutOfRange {
            name: "steps_per_unit_time",
            value: steps_per_unit_time as f64,
            range: "[100, inf)",
        });
    }

    let mut v = vectorize(rho_initial);
    let mut history =
        Vec::with_capacity((traj.total_time * steps_per_unit_time as f64) as usize + 8);
    push_sample(&mut history, 0.0, &v);

    let mut diagnostics = StepDiagnostics::default();
    for (segment, (t0, t1)) in traj.segments().into_iter().enumerate() {
        let span = t1 - t0;
        if span <= 0.0 {
            continue;
        }
        let n = (span * steps_per_unit_time as f64).ceil().max(1.0) as usize;
        let h = span / n as f64;
        // stage times as exact span fractions; the last step ends at
        // exactly t1 so the schedule never leaves its domain
        let at = |k: f64| {
            if k >= n as f64 {
                t1
            } else {
                t0 + span * (k / n as f64)
            }
        };
        for j in 0..n {
            let jf = j as f64;
            let stages = (at(jf), at(jf + 0.5), at(jf + 1.0));
            if j % LOCAL_ERROR_STRIDE == 0 {
                // step-doubling local error estimate (diagnostic only)
                let full = rk4_step(traj, segment, stages, h, &v)?;
                let half = rk4_step(
                    traj,
                    segment,
                    (at(jf), at(jf + 0.25), at(jf + 0.5)),
                    h / 2.0,
                    &v,
                )?;
                let halves = rk4_step(
                    traj,
                    segment,
                    (at(jf + 0.5), at(jf + 0.75), at(jf + 1.0)),
                    h / 2.0,
                    &half,
                )?;
                let est = (full - halves).infinity_norm() / 15.0;
                diagnostics.max_local_error = diagnostics.max_local_error.max(est);
                v = full;
            } else {
                v = rk4_step(traj, segment, stages, h, &v)?;
            }
            diagnostics.steps += 1;
            push_sample(&mut history, stages.2, &v);
            fault_checks(stages.2, &v)?;
        }
    }

    let final_state = devectorize(&v);
    let probability = final_state.trace();
    let herm = final_state.hermitian_part();
    let fid = |target: ReferenceState| -> Option<f64> {
        let overlap = overlap_with(&herm, target);
        (probability > 0.0).then(|| overlap / probability)
    };
    Ok(EvolutionResult {
        fidelity_plus: fid(ReferenceState::Plus),
        fidelity_minus: fid(ReferenceState::Minus),
        final_state,
        trace_history: history,
        probability,
        diagnostics,
    })
}

fn overlap_with(herm: &Array2<Complex64>, target: ReferenceState) -> f64 {
    let p = target.projector().matrix();
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..2 {
        for k in 0..2 {
            acc += herm[(r, k)] * p[(k, r)];
        }
    }
    acc.re
}

fn push_sample(history: &mut Vec<TraceSample>, t: f64, v: &LiouvilleVector) {
    history.push(TraceSample {
        t,
        trace: v.trace(),
        rho_uu: v[0].re,
        re_rho_ud: v[1].re,
        im_rho_ud: v[1].im,
        rho_dd: v[3].re,
        hermiticity_deviation: (v[2] - v[1].conj())
            .norm()
            .max(v[0].im.abs())
            .max(v[3].im.abs()),
    });
}

fn fault_checks(t: f64, v: &LiouvilleVector) -> Result<(), EvolveError> {
    if !v.is_finite() {
        return Err(EvolveError::IntegrationFault {
            t,
            kind: FaultKind::NonFinite,
            magnitude: f64::NAN,
        });
    }
    let trace = v.trace();
    if trace > 1.0 + TRACE_FAULT_TOL {
        return Err(EvolveError::IntegrationFault {
            t,
            kind: FaultKind::TraceExceedsUnity,
            magnitude: trace - 1.0,
        });
    }
    let herm = (v[2] - v[1].conj())
        .norm()
        .max(v[0].im.abs())
        .max(v[3].im.abs());
    if herm > HERMITICITY_FAULT_TOL {
        return Err(EvolveError::IntegrationFault {
            t,
            kind: FaultKind::HermiticityViolation,
            magnitude: herm,
        });
    }
    Ok(())
}

/// Conversion fidelity of the final state against the χ-selected pure
/// target: Tr[ρ(T) ρ_χ]/Tr[ρ(T)] when `normalized`, Tr[ρ(T) ρ_χ] raw.
///
/// The normalized (postselected-state) variant is the physically
/// meaningful figure when probability is lost along the way and is the
/// default throughout; the raw variant is bounded by P.
pub fn fidelity(
    result: &EvolutionResult,
    chi: Chirality,
    normalized: bool,
) -> Result<f64, EvolveError> {
    let raw = overlap_with(&result.final_state.hermitian_part(), chi.target());
    if !normalized {
        return Ok(raw);
    }
    if result.probability <= 0.0 {
        return Err(EvolveError::UndefinedFidelity {
            probability: result.probability,
        });
    }
    Ok(raw / result.probability)
}

/// Everything but q₀ of a protocol sweep.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub kind: TrajectoryKind,
    pub chi: Chirality,
    pub total_time: f64,
    pub omega: f64,
    pub alpha_max: f64,
    pub t1: f64,
    pub t2: f64,
    pub alpha_i: f64,
    pub alpha_ii: f64,
    pub initial: DensityMatrix,
    pub steps_per_unit_time: usize,
}

impl SweepConfig {
    /// Published protocol parameters with a maximally mixed start.
    pub fn published_defaults(kind: TrajectoryKind, chi: Chirality) -> Self {
        Self {
            kind,
            chi,
            total_time: protocol_defaults::TOTAL_TIME,
            omega: protocol_defaults::OMEGA,
            alpha_max: DEFAULT_ALPHA_MAX,
            t1: protocol_defaults::T1,
            t2: protocol_defaults::T2,
            alpha_i: protocol_defaults::ALPHA_I,
            alpha_ii: protocol_defaults::ALPHA_II,
            initial: crate::state::maximally_mixed(),
            steps_per_unit_time: DEFAULT_STEPS_PER_UNIT_TIME,
        }
    }

    pub fn trajectory(&self, q0: f64) -> Result<Trajectory, EvolveError> {
        match self.kind {
            TrajectoryKind::Tilted => {
                Trajectory::tilted_with_amplitude(q0, self.chi, self.total_time, self.omega, self.alpha_max)
            }
            TrajectoryKind::Flat => {
                Trajectory::flat_with_amplitude(q0, self.chi, self.total_time, self.omega, self.alpha_max)
            }
            TrajectoryKind::Hopping => Trajectory::hopping(
                q0,
                self.chi,
                self.t1,
                self.t2,
                self.alpha_i,
                self.alpha_ii,
                self.omega,
            ),
            TrajectoryKind::Custom => Err(EvolveError::UnsupportedKind(TrajectoryKind::Custom)),
        }
    }
}

/// Metrics at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub q0: f64,
    pub f_normalized: f64,
    pub f_raw: f64,
    pub probability: f64,
}

/// One integrate-and-measure evaluation per q₀ grid point, in grid
/// order, parallel across points. Failures carry the offending q₀.
pub fn sweep_q0(
    cfg: &SweepConfig,
    q0_grid: &[f64],
) -> Vec<(f64, Result<SweepPoint, EvolveError>)> {
    q0_grid
        .par_iter()
        .map(|&q0| {
            let outcome = (|| {
                let traj = cfg.trajectory(q0)?;
                let result = integrate(&traj, &cfg.initial, cfg.steps_per_unit_time)?;
                Ok(SweepPoint {
                    q0,
                    f_normalized: fidelity(&result, cfg.chi, true)?,
                    f_raw: fidelity(&result, cfg.chi, false)?,
                    probability: result.probability,
                })
            })()
            .map_err(|e| EvolveError::AtQ0 {
                q0,
                source: Box::new(e),
            });
            (q0, outcome)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::maximally_mixed;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn tilted_schedule_endpoints_and_midpoint() {
        let t = Trajectory::tilted(0.8, Chirality::Plus, 100.0, 1.0).unwrap();
        let c0 = t.control_at(0, 0.0);
        assert_abs_diff_eq!(c0.alpha, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c0.theta, FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(c0.q, 0.0, epsilon = 1e-12);
        let cm = t.control_at(0, 50.0);
        assert_relative_eq!(cm.alpha, 3.0, max_relative = 1e-12);
        assert_abs_diff_eq!(cm.theta, FRAC_PI_2, epsilon = 1e-9);
        assert_relative_eq!(cm.q, 0.8, max_relative = 1e-12);
        // quarter point: (1.5, π/2 − 1.5, q0/2)
        let cq = t.control_at(0, 25.0);
        assert_relative_eq!(cq.alpha, 1.5, max_relative = 1e-12);
        assert_relative_eq!(cq.theta, FRAC_PI_2 - 1.5, max_relative = 1e-12);
        assert_relative_eq!(cq.q, 0.4, max_relative = 1e-12);
    }

    #[test]
    fn flat_schedule_keeps_q_constant() {
        let t = Trajectory::flat(0.37, Chirality::Minus, 80.0, 1.0).unwrap();
        for tt in [0.0, 13.0, 40.0, 79.0] {
            assert_eq!(t.control_at(0, tt).q, 0.37);
        }
        let c0 = t.control_at(0, 0.0);
        assert_abs_diff_eq!(c0.alpha, 0.0, epsilon = 1e-12);
        let cm = t.control_at(0, 40.0);
        assert_relative_eq!(cm.alpha, 3.0, max_relative = 1e-12);
    }

    #[test]
    fn flat_q0_zero_equals_tilted_q0_zero() {
        let a = Trajectory::tilted(0.0, Chirality::Plus, 100.0, 1.0).unwrap();
        let b = Trajectory::flat(0.0, Chirality::Plus, 100.0, 1.0).unwrap();
        for tt in [0.0, 7.3, 25.0, 62.5, 100.0] {
            let (ca, cb) = (a.control_at(0, tt), b.control_at(0, tt));
            assert_eq!(ca.alpha, cb.alpha);
            assert_eq!(ca.theta, cb.theta);
            assert_eq!(ca.q, cb.q);
        }
    }

    #[test]
    fn hopping_schedule_segments() {
        let t = Trajectory::hopping(0.9, Chirality::Plus, 20.0, 60.0, 1e-5, 10.0, 1.0).unwrap();
        assert_eq!(t.total_time(), 100.0);
        assert_eq!(t.hop_times(), vec![20.0, 80.0]);
        assert_eq!(t.segments(), vec![(0.0, 20.0), (20.0, 80.0), (80.0, 100.0)]);
        // θ → 0 at the end of segment (i) for χ = +1
        let c = t.control_at(0, 20.0);
        assert_abs_diff_eq!(c.theta, 0.0, epsilon = 1e-12);
        assert_eq!(c.q, 0.0);
        // hold segment
        let c = t.control_at(1, 50.0);
        assert_eq!(c.alpha, 10.0);
        assert_abs_diff_eq!(c.theta, FRAC_PI_2, epsilon = 1e-12);
        assert_eq!(c.q, 0.9);
        // θ returns to π/2 at t = T
        let c = t.control_at(2, 100.0);
        assert_abs_diff_eq!(c.theta, FRAC_PI_2, epsilon = 1e-12);
        // and starts segment (iii) at π for χ = +1
        let c = t.control_at(2, 80.0);
        assert_abs_diff_eq!(c.theta, PI, epsilon = 1e-12);
    }

    #[test]
    fn trajectory_rejects_bad_parameters() {
        assert!(Trajectory::tilted(1.2, Chirality::Plus, 100.0, 1.0).is_err());
        assert!(Trajectory::tilted(0.5, Chirality::Plus, -1.0, 1.0).is_err());
        assert!(Trajectory::tilted(0.5, Chirality::Plus, 100.0, 0.0).is_err());
        assert!(Trajectory::hopping(0.5, Chirality::Plus, 0.0, 60.0, 1e-5, 10.0, 1.0).is_err());
        assert!(Trajectory::hopping(0.5, Chirality::Plus, 20.0, 60.0, -1e-5, 10.0, 1.0).is_err());
        assert!(Trajectory::hopping(0.5, Chirality::Plus, 20.0, 60.0, 1e-5, 0.0, 1.0).is_err());
        let err = Trajectory::tilted(1.2, Chirality::Plus, 100.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("q0"));
        assert!(err.to_string().contains("[0, 1]"));
    }

    #[test]
    fn integrate_requires_fine_enough_steps() {
        let t = Trajectory::tilted(0.0, Chirality::Plus, 10.0, 1.0).unwrap();
        assert!(matches!(
            integrate(&t, &maximally_mixed(), 99),
            Err(EvolveError::OutOfRange { name: "steps_per_unit_time", .. })
        ));
    }

    #[test]
    fn stationary_eigenstate_is_preserved_without_dissipation() {
        // constant θ = π/2, α = 0: |+⟩⟨+| is stationary and P = 1
        let t = Trajectory::custom(
            |_| Control { alpha: 0.0, theta: FRAC_PI_2, q: 0.0 },
            vec![],
            Chirality::Plus,
            30.0,
            1.0,
        )
        .unwrap();
        let rho0 = ReferenceState::Plus.projector();
        let r = integrate(&t, &rho0, 200).unwrap();
        assert_abs_diff_eq!(r.probability, 1.0, epsilon = 1e-10);
        assert!(fidelity(&r, Chirality::Plus, true).unwrap() > 1.0 - 1e-10);
        assert!(r.final_state.hermiticity_deviation < 1e-12);
    }

    #[test]
    fn relaxation_closed_form() {
        // θ = 0, ω = 1, γ = 1, q = 1, ρ(0) = |↑⟩⟨↑|: populations decay
        // exponentially; at T = ln 2 both levels hold probability 1/2.
        let t = Trajectory::custom(
            |_| Control { alpha: 0.5, theta: 0.0, q: 1.0 },
            vec![],
            Chirality::Plus,
            std::f64::consts::LN_2,
            1.0,
        )
        .unwrap();
        let r = integrate(&t, &ReferenceState::Up.projector(), 2000).unwrap();
        let m = r.final_state.hermitian_part();
        assert_abs_diff_eq!(m[(0, 0)].re, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(m[(1, 1)].re, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(r.probability, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn trace_is_preserved_at_q1_and_monotone_below() {
        let t = Trajectory::flat(1.0, Chirality::Plus, 100.0, 1.0).unwrap();
        let r = integrate(&t, &maximally_mixed(), 300).unwrap();
        for s in &r.trace_history {
            assert_abs_diff_eq!(s.trace, 1.0, epsilon = 1e-9);
        }
        let t = Trajectory::tilted(0.6, Chirality::Plus, 100.0, 1.0).unwrap();
        let r = integrate(&t, &maximally_mixed(), 300).unwrap();
        for w in r.trace_history.windows(2) {
            assert!(w[1].trace <= w[0].trace + 1e-9, "trace grew at t={}", w[1].t);
        }
    }

    #[test]
    fn integration_fault_on_unstable_stepping() {
        // γ h far outside the RK4 stability region blows the state up
        let t = Trajectory::custom(
            |_| Control { alpha: 5000.0, theta: FRAC_PI_2, q: 0.3 },
            vec![],
            Chirality::Plus,
            5.0,
            1.0,
        )
        .unwrap();
        match integrate(&t, &maximally_mixed(), 100) {
            Err(EvolveError::IntegrationFault { .. }) => {}
            other => panic!("expected an integration fault, got {other:?}"),
        }
    }

    #[test]
    fn fidelity_raw_vs_normalized() {
        let t = Trajectory::tilted(0.0, Chirality::Plus, 100.0, 1.0).unwrap();
        let r = integrate(&t, &maximally_mixed(), 300).unwrap();
        let fn_ = fidelity(&r, Chirality::Plus, true).unwrap();
        let fr = fidelity(&r, Chirality::Plus, false).unwrap();
        assert_relative_eq!(fr, fn_ * r.probability, max_relative = 1e-12);
        assert!(fr <= r.probability + 1e-12);
        // exact-target sanity: ρ(T) = |+⟩⟨+| gives 1; mixed gives 1/2
        assert_relative_eq!(
            ReferenceState::Plus.projector().overlap(&ReferenceState::Plus.projector()),
            1.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            maximally_mixed().overlap(&ReferenceState::Plus.projector()),
            0.5,
            max_relative = 1e-15
        );
    }

    #[test]
    fn step_halving_changes_metrics_below_tolerance() {
        let cfg = SweepConfig {
            steps_per_unit_time: 250,
            ..SweepConfig::published_defaults(TrajectoryKind::Hopping, Chirality::Plus)
        };
        let coarse = &sweep_q0(&cfg, &[1.0])[0].1.as_ref().unwrap().clone();
        let cfg2 = SweepConfig {
            steps_per_unit_time: 500,
            ..cfg
        };
        let fine = &sweep_q0(&cfg2, &[1.0])[0].1.as_ref().unwrap().clone();
        assert!((coarse.f_normalized - fine.f_normalized).abs() < 1e-8);
        assert!((coarse.probability - fine.probability).abs() < 1e-8);
    }

    #[test]
    fn sweep_attaches_q0_to_failures() {
        let mut cfg = SweepConfig::published_defaults(TrajectoryKind::Hopping, Chirality::Plus);
        cfg.alpha_ii = 50_000.0; // guarantees an RK4 blow-up fault
        cfg.steps_per_unit_time = 100;
        let out = sweep_q0(&cfg, &[0.5]);
        match &out[0].1 {
            Err(EvolveError::AtQ0 { q0, source }) => {
                assert_eq!(*q0, 0.5);
                assert!(matches!(**source, EvolveError::IntegrationFault { .. }));
            }
            other => panic!("expected AtQ0 error, got {other:?}"),
        }
    }

    #[test]
    fn sweep_is_deterministic_and_ordered() {
        let cfg = SweepConfig {
            steps_per_unit_time: 100,
            total_time: 20.0,
            ..SweepConfig::published_defaults(TrajectoryKind::Flat, Chirality::Plus)
        };
        let grid = [0.0, 0.5, 1.0];
        let a = sweep_q0(&cfg, &grid);
        let b = sweep_q0(&cfg, &grid);
        for ((qa, ra), (qb, rb)) in a.iter().zip(b.iter()) {
            assert_eq!(qa, qb);
            let (ra, rb) = (ra.as_ref().unwrap(), rb.as_ref().unwrap());
            assert_eq!(ra.f_normalized.to_bits(), rb.f_normalized.to_bits());
            assert_eq!(ra.probability.to_bits(), rb.probability.to_bits());
        }
        assert_eq!(a[0].0, 0.0);
        assert_eq!(a[2].0, 1.0);
    }

    #[test]
    fn decimated_history_keeps_endpoints() {
        let t = Trajectory::flat(1.0, Chirality::Plus, 10.0, 1.0).unwrap();
        let r = integrate(&t, &maximally_mixed(), 500).unwrap();
        assert!(r.trace_history.len() > 5000);
        let d = r.decimated_history(100);
        assert!(d.len() <= 101);
        assert_eq!(d[0].t, 0.0);
        assert_relative_eq!(d.last().unwrap().t, 10.0, max_relative = 1e-12);
    }

    #[test]
    fn local_error_estimate_is_small_at_default_resolution() {
        let t = Trajectory::flat(0.5, Chirality::Plus, 20.0, 1.0).unwrap();
        let r = integrate(&t, &maximally_mixed(), 1000).unwrap();
        assert!(r.diagnostics.max_local_error < 1e-10);
        assert_eq!(r.diagnostics.steps, 20 * 1000);
    }
}
