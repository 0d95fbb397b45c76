//! Weak-regime SNR and the smallest detectable mirror displacement.
//!
//! This is the only module that works in SI units: wavelengths and
//! displacements in meters, energies in joules.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;
pub const HBAR: f64 = 1.054_571_817e-34;

/// Largest strength accepted by [`weak_regime_snr`].
pub const WEAK_REGIME_LIMIT: f64 = 0.1;

/// SNR at which a displacement counts as detected.
pub const DETECTION_THRESHOLD: f64 = 1.0;

/// Photon budget and source parameters of a displacement measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentBudget {
    pub n_in: f64,
    /// Central wavelength in meters.
    pub lambda0: f64,
    /// Bandwidth ratio `σ_ω / ω₀`.
    pub sigma_ratio: f64,
    pub theta: f64,
}

impl ExperimentBudget {
    pub fn new(n_in: f64, lambda0: f64, sigma_ratio: f64, theta: f64) -> Result<Self> {
        if !(n_in >= 1.0) || !n_in.is_finite() {
            return Err(Error::invalid(
                "n_in",
                format!("{n_in} must be finite and >= 1"),
            ));
        }
        if !(lambda0 > 0.0) || !lambda0.is_finite() {
            return Err(Error::invalid("lambda0", format!("{lambda0} must be > 0")));
        }
        if !(sigma_ratio > 0.0 && sigma_ratio <= 1.0) {
            return Err(Error::invalid(
                "sigma_ratio",
                format!("{sigma_ratio} is not in (0, 1]"),
            ));
        }
        if !(theta > 0.0 && theta < PI) {
            return Err(Error::invalid("theta", format!("{theta} is not in (0, π)")));
        }
        Ok(Self {
            n_in,
            lambda0,
            sigma_ratio,
            theta,
        })
    }

    /// Central angular frequency `ω₀ = 2πc/λ₀` in rad/s.
    pub fn omega0(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.lambda0
    }

    pub fn sigma_omega(&self) -> f64 {
        self.sigma_ratio * self.omega0()
    }
}

/// Number of photons in a pulse of `energy` joules at wavelength `lambda0`.
pub fn photons_from_energy(energy: f64, lambda0: f64) -> Result<f64> {
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(Error::invalid("energy", format!("{energy} must be > 0")));
    }
    if !(lambda0 > 0.0) || !lambda0.is_finite() {
        return Err(Error::invalid("lambda0", format!("{lambda0} must be > 0")));
    }
    let omega0 = 2.0 * PI * SPEED_OF_LIGHT / lambda0;
    Ok(energy / (HBAR * omega0))
}

/// Photons leaving the dark port, `N_in sin²(θ/2)`.
pub fn output_photons(n_in: f64, theta: f64) -> Result<f64> {
    if !(n_in > 0.0) || !n_in.is_finite() {
        return Err(Error::invalid("n_in", format!("{n_in} must be > 0")));
    }
    if !(theta > 0.0 && theta <= PI) {
        return Err(Error::invalid("theta", format!("{theta} is not in (0, π]")));
    }
    Ok(n_in * (0.5 * theta).sin().powi(2))
}

/// Leading-order SNR for `s ≪ 1`: `√(2 s N_out) cot(θ/2)`.
pub fn weak_regime_snr(s: f64, theta: f64, n_out: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::invalid("s", format!("{s} is negative")));
    }
    if s > WEAK_REGIME_LIMIT {
        return Err(Error::OutOfRegime {
            s,
            limit: WEAK_REGIME_LIMIT,
        });
    }
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::invalid("theta", format!("{theta} is not in (0, π)")));
    }
    if !(n_out >= 0.0) || !n_out.is_finite() {
        return Err(Error::invalid("n_out", format!("{n_out} must be >= 0")));
    }
    let half = 0.5 * theta;
    Ok((2.0 * s * n_out).sqrt() * half.cos() / half.sin())
}

/// Measurement strength produced by a displacement `ell` (meters):
/// `s = 4 ℓ² σ_ω² / c²`.
pub fn strength_from_displacement(ell: f64, budget: &ExperimentBudget) -> f64 {
    let k = ell * budget.sigma_omega() / SPEED_OF_LIGHT;
    4.0 * k * k
}

/// Displacement at which the weak-regime SNR reaches one:
/// `λ₀ / (4π √(2 N_in) cos(θ/2)) · (σ_ω/ω₀)⁻¹`.
pub fn min_displacement(budget: &ExperimentBudget) -> f64 {
    budget.lambda0
        / (4.0 * PI * (2.0 * budget.n_in).sqrt() * (0.5 * budget.theta).cos())
        / budget.sigma_ratio
}

/// Detection limit together with the intermediate quantities of its derivation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitReport {
    pub ell_min: f64,
    pub n_out: f64,
    pub s_threshold: f64,
    /// Weak-regime SNR recomputed at `ell_min`; one up to rounding.
    pub snr_at_threshold: f64,
}

pub fn detection_limit(budget: &ExperimentBudget) -> Result<LimitReport> {
    let ell_min = min_displacement(budget);
    let n_out = output_photons(budget.n_in, budget.theta)?;
    let s_threshold = strength_from_displacement(ell_min, budget);
    let snr_at_threshold = weak_regime_snr(s_threshold, budget.theta, n_out)?;
    Ok(LimitReport {
        ell_min,
        n_out,
        s_threshold,
        snr_at_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snr::snr_closed_form;

    fn reference_budget() -> ExperimentBudget {
        let n_in = photons_from_energy(1.0, 1e-6).unwrap();
        ExperimentBudget::new(n_in, 1e-6, 1.0, 1e-3).unwrap()
    }

    #[test]
    fn output_photons_cases() {
        assert!((output_photons(7.0, PI).unwrap() - 7.0).abs() < 1e-14);
        let n = output_photons(5e18, 1e-3).unwrap();
        // sin(5e-4)² = 2.4999997916666840e-7
        assert!((n / (5e18 * 2.499_999_791_666_684e-7) - 1.0).abs() < 1e-14);
        assert!(output_photons(1e6, 1e-12).unwrap() < 1e-12);
        assert!(output_photons(0.0, 0.1).is_err());
    }

    #[test]
    fn photon_count_of_one_joule() {
        let n = photons_from_energy(1.0, 1e-6).unwrap();
        assert!((n / 5e18 - 1.0).abs() < 0.01, "{n}");
    }

    #[test]
    fn weak_snr_agrees_with_closed_form() {
        // the weak form drops corrections of relative size s/θ²
        let weak = weak_regime_snr(1e-9, 0.1, 1.0).unwrap();
        let full = snr_closed_form(1e-9, 0.1, 1.0).unwrap();
        assert!((weak / full - 1.0).abs() < 1e-4);
    }

    #[test]
    fn weak_snr_scaling_and_guard() {
        let a = weak_regime_snr(1e-3, 0.2, 1.0).unwrap();
        let b = weak_regime_snr(1e-3, 0.2, 100.0).unwrap();
        assert!((b / a - 10.0).abs() < 1e-12);
        assert_eq!(weak_regime_snr(0.0, 0.2, 1.0).unwrap(), 0.0);
        assert!(matches!(
            weak_regime_snr(0.2, 0.2, 1.0),
            Err(Error::OutOfRegime { .. })
        ));
    }

    #[test]
    fn min_displacement_scalings() {
        let base = reference_budget();
        let l0 = min_displacement(&base);
        let quad = ExperimentBudget {
            n_in: 4.0 * base.n_in,
            ..base
        };
        assert!((min_displacement(&quad) / l0 - 0.5).abs() < 1e-14);
        let narrow = ExperimentBudget {
            sigma_ratio: 0.5,
            ..base
        };
        assert!((min_displacement(&narrow) / l0 - 2.0).abs() < 1e-14);
        let red = ExperimentBudget {
            lambda0: 2e-6,
            ..base
        };
        assert!((min_displacement(&red) / l0 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn threshold_round_trip() {
        for theta in [1e-4, 1e-3, 1e-2, 0.5] {
            let budget = ExperimentBudget {
                theta,
                ..reference_budget()
            };
            let report = detection_limit(&budget).unwrap();
            assert!((report.snr_at_threshold - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn limit_is_theta_insensitive_at_small_angles() {
        let limits: Vec<f64> = [1e-4, 1e-3, 1e-2]
            .iter()
            .map(|&theta| {
                min_displacement(&ExperimentBudget {
                    theta,
                    ..reference_budget()
                })
            })
            .collect();
        let (lo, hi) = limits
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), &l| (a.min(l), b.max(l)));
        assert!(hi / lo - 1.0 < 1e-4);
    }

    #[test]
    fn budget_validation() {
        assert!(ExperimentBudget::new(0.5, 1e-6, 1.0, 1e-3).is_err());
        assert!(ExperimentBudget::new(1e10, 0.0, 1.0, 1e-3).is_err());
        assert!(ExperimentBudget::new(1e10, 1e-6, 1.5, 1e-3).is_err());
        assert!(ExperimentBudget::new(1e10, 1e-6, 1.0, 0.0).is_err());
    }
}
