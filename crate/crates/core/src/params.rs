// Copyright 2026 hlq Contributors
// SPDX-License-Identifier: Apache-2.0

//! Control parameters of the dissipative qubit.

use thiserror::Error;

/// A parameter lies outside its physical range.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{name} = {value} is outside the valid range {range}")]
pub struct ParamError {
    pub name: &'static str,
    pub value: f64,
    pub range: &'static str,
}

/// Control parameters (ω, θ, γ, q) of the driven, dissipative qubit.
///
/// The Hamiltonian angle θ and the rates ω, γ are kept as independent
/// fields so that γ stays finite and well-defined when ω → 0; the
/// dimensionless ratio α = γ/(2ω) is a derived accessor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    omega: f64,
    theta: f64,
    gamma: f64,
    q: f64,
}

impl SystemParams {
    /// Build from (ω, θ, γ, q), rejecting out-of-range values.
    pub fn new(omega: f64, theta: f64, gamma: f64, q: f64) -> Result<Self, ParamError> {
        check_range("omega", omega, 0.0, f64::INFINITY, "[0, inf)")?;
        check_range("theta", theta, 0.0, std::f64::consts::PI, "[0, pi]")?;
        check_range("gamma", gamma, 0.0, f64::INFINITY, "[0, inf)")?;
        check_range("q", q, 0.0, 1.0, "[0, 1]")?;
        Ok(Self {
            omega,
            theta,
            gamma,
            q,
        })
    }

    /// Build from (ω, α, θ, q) with γ = 2ωα. Requires ω > 0.
    pub fn from_alpha(omega: f64, alpha: f64, theta: f64, q: f64) -> Result<Self, ParamError> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(ParamError {
                name: "omega",
                value: omega,
                range: "(0, inf) when constructing from alpha",
            });
        }
        check_range("alpha", alpha, 0.0, f64::INFINITY, "[0, inf)")?;
        Self::new(omega, theta, 2.0 * omega * alpha, q)
    }

    /// Build at ω = 1, the unit system used throughout the atlas.
    pub fn at_unit_omega(alpha: f64, theta: f64, q: f64) -> Result<Self, ParamError> {
        Self::from_alpha(1.0, alpha, theta, q)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// α = γ/(2ω); `None` when ω = 0.
    pub fn alpha(&self) -> Option<f64> {
        (self.omega > 0.0).then(|| self.gamma / (2.0 * self.omega))
    }

    /// Transverse drive component ω_x = ω sin θ.
    pub fn omega_x(&self) -> f64 {
        self.omega * self.theta.sin()
    }

    /// Longitudinal drive component ω_z = ω cos θ.
    pub fn omega_z(&self) -> f64 {
        self.omega * self.theta.cos()
    }
}

fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    range: &'static str,
) -> Result<(), ParamError> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(ParamError { name, value, range })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn accepts_valid_ranges() {
        let p = SystemParams::new(1.0, std::f64::consts::PI, 2.0, 1.0).unwrap();
        assert_relative_eq!(p.alpha().unwrap(), 1.0);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(SystemParams::new(-1.0, 0.0, 0.0, 0.0).is_err());
        assert!(SystemParams::new(1.0, -0.1, 0.0, 0.0).is_err());
        assert!(SystemParams::new(1.0, 3.2, 0.0, 0.0).is_err());
        assert!(SystemParams::new(1.0, 0.0, -0.5, 0.0).is_err());
        assert!(SystemParams::new(1.0, 0.0, 0.0, 1.5).is_err());
        assert!(SystemParams::new(f64::NAN, 0.0, 0.0, 0.0).is_err());
        let err = SystemParams::new(1.0, 0.0, 0.0, -0.2).unwrap_err();
        assert_eq!(err.name, "q");
        assert!(err.to_string().contains("[0, 1]"));
    }

    #[test]
    fn alpha_is_derived_and_undefined_at_zero_omega() {
        let p = SystemParams::new(2.0, 0.3, 3.0, 0.5).unwrap();
        assert_relative_eq!(p.alpha().unwrap(), 0.75);
        let p0 = SystemParams::new(0.0, 0.3, 3.0, 0.5).unwrap();
        assert!(p0.alpha().is_none());
    }

    #[test]
    fn from_alpha_requires_positive_omega() {
        assert!(SystemParams::from_alpha(0.0, 1.0, 0.0, 0.0).is_err());
        let p = SystemParams::from_alpha(2.0, 1.5, 0.1, 0.2).unwrap();
        assert_relative_eq!(p.gamma(), 6.0);
    }

    #[test]
    fn drive_components() {
        let p = SystemParams::new(2.0, std::f64::consts::FRAC_PI_2, 0.0, 0.0).unwrap();
        assert_relative_eq!(p.omega_x(), 2.0, max_relative = 1e-15);
        assert!(p.omega_z().abs() < 1e-15);
    }
}
