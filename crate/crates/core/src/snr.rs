//! Closed-form signal-to-noise ratio of the shot-noise limited pointer
//! measurement, its optimum over the measurement strength, and sweeps.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pointer::{gaussian_moments, one_minus_damped_cos, CouplingParams, SelectionAngle};

pub const DEFAULT_SWEEP_POINTS: usize = 400;
pub const DEFAULT_S_MIN: f64 = 1e-8;
pub const DEFAULT_S_MAX: f64 = 10.0;

/// θ values of the reference curves.
pub const REFERENCE_THETAS: [f64; 4] = [1e-4, 1e-3, 1e-2, 1e-1];

/// One grid point of a strength sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPoint {
    pub s: f64,
    pub theta: f64,
    pub snr_single_photon: f64,
    pub shift_g: f64,
    pub second_g2: f64,
}

/// SNR-optimal measurement strength for a fixed selection angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub theta: f64,
    pub s_opt: f64,
    pub snr_at_opt: f64,
    /// Residual of the stationarity condition at `s_opt`.
    pub residual: f64,
}

/// Single-photon SNR for β = 0, both denominator factors evaluated without
/// cancellation.
fn snr_unit(s: f64, theta: f64) -> f64 {
    let damp = (-s).exp();
    let d1 = one_minus_damped_cos(s, theta);
    let d2 = d1 + 2.0 * s * damp * theta.cos();
    (2.0 * s).sqrt() * damp * theta.sin() / (d1 * d2).sqrt()
}

/// `√n_out · √(2s) e^{−s} sin θ / √((1 − e^{−s}cos θ)(1 − (1−2s) e^{−s} cos θ))`.
pub fn snr_closed_form(s: f64, theta: f64, n_out: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::invalid("s", format!("{s} must be finite and > 0")));
    }
    if !(theta > 0.0 && theta <= std::f64::consts::PI) {
        return Err(Error::invalid("theta", format!("{theta} is not in (0, π]")));
    }
    if !(n_out >= 1.0) || !n_out.is_finite() {
        return Err(Error::invalid(
            "n_out",
            format!("{n_out} must be finite and >= 1"),
        ));
    }
    Ok(n_out.sqrt() * snr_unit(s, theta))
}

/// Supremum of the single-photon SNR, reached as θ → 0 at the optimal strength.
pub fn snr_max() -> f64 {
    (2.0 / (2.0 + 3f64.sqrt())).sqrt()
}

/// `e^s [1 + s² − s(1 + √(3 − 2s + s²))] − cos θ`, arranged so that the
/// leading `1 − cos θ` cancellation happens analytically.
pub fn optimality_residual(s: f64, theta: f64) -> f64 {
    let root = (3.0 - 2.0 * s + s * s).sqrt();
    let bracket_minus_one = s * s - s * (1.0 + root);
    s.exp_m1() * (1.0 + bracket_minus_one) + bracket_minus_one + 2.0 * (0.5 * theta).sin().powi(2)
}

/// Root of the stationarity condition ∂SNR/∂s = 0 by bisection on `[0, 1]`.
pub fn optimal_s(theta: f64) -> Result<Optimum> {
    if !(theta > 0.0 && theta < std::f64::consts::PI) {
        return Err(Error::invalid("theta", format!("{theta} is not in (0, π)")));
    }
    let f = |s: f64| optimality_residual(s, theta);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let (f_lo, f_hi) = (f(lo), f(hi));
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::NoBracket { lo, hi });
    }
    // run to machine resolution of the root rather than a fixed width
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if fm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s_opt = if f(lo).abs() <= f(hi).abs() { lo } else { hi };
    if !(s_opt > 0.0) {
        return Err(Error::NoBracket { lo, hi });
    }

    let snr_at_opt = snr_unit(s_opt, theta);
    let delta = 1e-4 * s_opt;
    if !(snr_unit(s_opt - delta, theta) < snr_at_opt && snr_unit(s_opt + delta, theta) < snr_at_opt)
    {
        return Err(Error::NotAMaximum { s: s_opt });
    }
    Ok(Optimum {
        theta,
        s_opt,
        snr_at_opt,
        residual: f(s_opt),
    })
}

/// `n` log-spaced points from `min` to `max` inclusive.
pub fn log_grid(min: f64, max: f64, n: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max > min && max.is_finite()) {
        return Err(Error::invalid(
            "s-grid",
            format!("need 0 < min < max, got [{min}, {max}]"),
        ));
    }
    if n < 2 {
        return Err(Error::invalid("s-grid", "need at least 2 points"));
    }
    let (a, b) = (min.ln(), max.ln());
    let step = (b - a) / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|i| (a + step * i as f64).exp()).collect();
    grid[0] = min;
    grid[n - 1] = max;
    Ok(grid)
}

/// 400 log-spaced strengths over `[1e-8, 10]`.
pub fn default_s_grid() -> Vec<f64> {
    log_grid(DEFAULT_S_MIN, DEFAULT_S_MAX, DEFAULT_SWEEP_POINTS).expect("valid default grid")
}

/// Shift, second moment and single-photon SNR on the `theta × s` grid,
/// θ-major, s-minor.
pub fn sweep(s_grid: &[f64], theta_list: &[f64], beta: f64) -> Result<Vec<SnrPoint>> {
    check_ascending("s-grid", s_grid)?;
    check_ascending("theta list", theta_list)?;
    if s_grid[0] <= 0.0 {
        return Err(Error::invalid("s-grid", "strengths must be > 0"));
    }
    let angles = theta_list
        .iter()
        .map(|&t| SelectionAngle::new(t))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(SelectionAngle, f64)> = angles
        .iter()
        .flat_map(|&a| s_grid.iter().map(move |&s| (a, s)))
        .collect();
    cells
        .par_iter()
        .map(|&(theta, s)| {
            let params = CouplingParams::dimensionless(s, beta)?;
            let m = gaussian_moments(&params, theta)?;
            Ok(SnrPoint {
                s,
                theta: theta.radians(),
                snr_single_photon: m.shift_g.abs() / m.second_g2.sqrt(),
                shift_g: m.shift_g,
                second_g2: m.second_g2,
            })
        })
        .collect()
}

fn check_ascending(name: &'static str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid(name, "is empty"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(name, "contains non-finite values"));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(name, "must be strictly ascending"));
    }
    Ok(())
}
