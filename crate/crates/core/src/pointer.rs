//! Post-selected pointer statistics.
//!
//! The which-path observable `A = |↑⟩⟨↑| − |↓⟩⟨↓|` squares to the identity,
//! so the interaction unitary `exp(−i g A ω)` is `cos gω − i A sin gω` and
//! the post-selected pointer state is known to all orders in the coupling.
//! Moments of the post-selected distribution are ratios of expectation
//! values over the *initial* pointer state:
//!
//! ```text
//! ⟨ωⁿ⟩′ = [⟨ωⁿ⟩ + (|A_w|²−1)⟨ωⁿ sin² gω⟩ + Im A_w ⟨ωⁿ sin 2gω⟩] / Z
//! Z     =  1   + (|A_w|²−1)⟨sin² gω⟩    + Im A_w ⟨sin 2gω⟩
//! ```
//!
//! For a Gaussian initial state the brackets have closed forms, which
//! [`gaussian_moments`] evaluates in a cancellation-free arrangement.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{QuadratureRule, QuadratureSpec};

/// Below this the post-selection normalization is treated as zero.
pub const DEGENERACY_THRESHOLD: f64 = 1e-30;

/// Smallest selection angle for which the weak value is representable.
pub const MIN_WEAK_VALUE_THETA: f64 = 1e-8;

pub const MAX_MOMENT_ORDER: u32 = 4;

const MIN_TABULATED_POINTS: usize = 8;

/// Phase offset θ between the interferometer arms, in `[0, π]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SelectionAngle(f64);

impl SelectionAngle {
    pub fn new(theta: f64) -> Result<Self> {
        if !theta.is_finite() || !(0.0..=PI).contains(&theta) {
            return Err(Error::invalid("theta", format!("{theta} is not in [0, π]")));
        }
        Ok(Self(theta))
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

/// Complex weak value `A_w = ⟨ψ_f|A|ψ_i⟩ / ⟨ψ_f|ψ_i⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakValue {
    pub re: f64,
    pub im: f64,
}

impl WeakValue {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

impl From<Complex64> for WeakValue {
    fn from(c: Complex64) -> Self {
        Self { re: c.re, im: c.im }
    }
}

/// Weak value of the which-path observable, `−i cot(θ/2)`.
pub fn weak_value(theta: SelectionAngle) -> Result<WeakValue> {
    let theta = theta.radians();
    if theta < MIN_WEAK_VALUE_THETA {
        return Err(Error::invalid(
            "theta",
            format!(
                "{theta} is below {MIN_WEAK_VALUE_THETA}: pre- and post-selection are orthogonal"
            ),
        ));
    }
    let half = 0.5 * theta;
    Ok(WeakValue::new(0.0, -(half.cos() / half.sin())))
}

/// Overlap `⟨ψ_f|ψ_i⟩ = i sin(θ/2)` of the post- and pre-selected states.
pub fn selection_overlap(theta: SelectionAngle) -> Complex64 {
    Complex64::new(0.0, (0.5 * theta.radians()).sin())
}

/// Interaction strength `g` together with the Gaussian pointer parameters
/// that define the dimensionless `s = 2 g² σ_ω²` and `β = 2 g ω₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    g: f64,
    omega0: f64,
    sigma_omega: f64,
    s: f64,
    beta: f64,
}

impl CouplingParams {
    pub fn new(g: f64, omega0: f64, sigma_omega: f64) -> Result<Self> {
        check_finite("g", g)?;
        check_finite("omega0", omega0)?;
        check_positive("sigma_omega", sigma_omega)?;
        Ok(Self {
            g,
            omega0,
            sigma_omega,
            s: 2.0 * g * g * sigma_omega * sigma_omega,
            beta: 2.0 * g * omega0,
        })
    }

    /// Builds the coupling from the dimensionless strength and offset.
    pub fn from_strength(s: f64, beta: f64, sigma_omega: f64) -> Result<Self> {
        check_finite("s", s)?;
        if s < 0.0 {
            return Err(Error::invalid("s", format!("{s} is negative")));
        }
        check_finite("beta", beta)?;
        check_positive("sigma_omega", sigma_omega)?;
        let g = (0.5 * s).sqrt() / sigma_omega;
        let omega0 = if g > 0.0 {
            beta / (2.0 * g)
        } else if beta == 0.0 {
            0.0
        } else {
            return Err(Error::invalid("beta", "must be 0 when s = 0"));
        };
        Ok(Self {
            g,
            omega0,
            sigma_omega,
            s,
            beta,
        })
    }

    /// `s`, `β` with unit pointer width; the natural choice for g-scaled work.
    pub fn dimensionless(s: f64, beta: f64) -> Result<Self> {
        Self::from_strength(s, beta, 1.0)
    }

    /// Coupling from a differential mirror displacement, `g = √2 ℓ`.
    pub fn from_displacement(ell: f64, omega0: f64, sigma_omega: f64) -> Result<Self> {
        Self::new(SQRT_2 * ell, omega0, sigma_omega)
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn sigma_omega(&self) -> f64 {
        self.sigma_omega
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn ell(&self) -> f64 {
        self.g / SQRT_2
    }

    /// The Gaussian initial pointer state these parameters describe.
    pub fn gaussian_state(&self) -> PointerState {
        PointerState::Gaussian {
            omega0: self.omega0,
            sigma_omega: self.sigma_omega,
        }
    }
}

fn check_finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{v} is not finite")))
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{v} must be finite and > 0")))
    }
}

/// Initial distribution of the pointer (photon frequency).
#[derive(Debug, Clone, PartialEq)]
pub enum PointerState {
    Gaussian { omega0: f64, sigma_omega: f64 },
    Tabulated(TabulatedState),
}

impl PointerState {
    pub fn gaussian(omega0: f64, sigma_omega: f64) -> Result<Self> {
        check_finite("omega0", omega0)?;
        check_positive("sigma_omega", sigma_omega)?;
        Ok(PointerState::Gaussian {
            omega0,
            sigma_omega,
        })
    }

    pub fn tabulated(grid: Vec<f64>, amplitude: Vec<Complex64>) -> Result<Self> {
        TabulatedState::new(grid, amplitude).map(PointerState::Tabulated)
    }

    /// `|Φ(ω)|²`.
    pub fn density(&self, omega: f64) -> f64 {
        match self {
            PointerState::Gaussian {
                omega0,
                sigma_omega,
            } => {
                let z = (omega - omega0) / sigma_omega;
                (-0.5 * z * z).exp() / ((2.0 * PI).sqrt() * sigma_omega)
            }
            PointerState::Tabulated(tab) => tab.density_at(omega),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            PointerState::Gaussian { omega0, .. } => *omega0,
            PointerState::Tabulated(tab) => tab.mean(),
        }
    }

    pub fn std_dev(&self) -> f64 {
        match self {
            PointerState::Gaussian { sigma_omega, .. } => *sigma_omega,
            PointerState::Tabulated(tab) => tab.variance().sqrt(),
        }
    }
}

/// Pointer amplitude sampled on an ascending frequency grid, normalized so
/// that the trapezoid integral of `|Φ|²` over the grid is one.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedState {
    grid: Vec<f64>,
    amplitude: Vec<Complex64>,
    density: Vec<f64>,
}

impl TabulatedState {
    pub fn new(grid: Vec<f64>, amplitude: Vec<Complex64>) -> Result<Self> {
        if grid.len() < MIN_TABULATED_POINTS {
            return Err(Error::invalid(
                "grid",
                format!(
                    "{} points, need at least {MIN_TABULATED_POINTS}",
                    grid.len()
                ),
            ));
        }
        if grid.len() != amplitude.len() {
            return Err(Error::invalid(
                "amplitude",
                format!("{} values for {} grid points", amplitude.len(), grid.len()),
            ));
        }
        if grid.iter().any(|x| !x.is_finite()) || amplitude.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("grid", "contains non-finite values"));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("grid", "must be strictly ascending"));
        }
        let raw: Vec<f64> = amplitude.iter().map(|a| a.norm_sqr()).collect();
        let mass = trapezoid(&grid, &raw);
        if !(mass > 0.0) {
            return Err(Error::invalid("amplitude", "has zero norm"));
        }
        let scale = mass.sqrt();
        let amplitude: Vec<Complex64> = amplitude.iter().map(|a| a / scale).collect();
        let density = raw.iter().map(|r| r / mass).collect();
        Ok(Self {
            grid,
            amplitude,
            density,
        })
    }

    pub fn from_real(grid: Vec<f64>, amplitude: &[f64]) -> Result<Self> {
        let amplitude = amplitude.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        Self::new(grid, amplitude)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn amplitude(&self) -> &[Complex64] {
        &self.amplitude
    }

    /// `|Φ|²` at the grid points.
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn mean(&self) -> f64 {
        let f: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.density)
            .map(|(w, r)| w * r)
            .collect();
        trapezoid(&self.grid, &f)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let f: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.density)
            .map(|(w, r)| (w - m) * (w - m) * r)
            .collect();
        trapezoid(&self.grid, &f)
    }

    /// Cubic (four-point Lagrange) interpolation of `|Φ|²` inside interval `i`.
    pub fn interpolate_density(&self, i: usize, omega: f64) -> f64 {
        let n = self.grid.len();
        let start = i.saturating_sub(1).min(n - 4);
        let xs = &self.grid[start..start + 4];
        let ys = &self.density[start..start + 4];
        let mut acc = 0.0;
        for j in 0..4 {
            let mut basis = 1.0;
            for k in 0..4 {
                if k != j {
                    basis *= (omega - xs[k]) / (xs[j] - xs[k]);
                }
            }
            acc += basis * ys[j];
        }
        acc.max(0.0)
    }

    /// Interpolated `|Φ(ω)|²`; zero outside the grid.
    pub fn density_at(&self, omega: f64) -> f64 {
        let n = self.grid.len();
        if omega < self.grid[0] || omega > self.grid[n - 1] {
            return 0.0;
        }
        let i = self.grid.partition_point(|&x| x <= omega).saturating_sub(1);
        if i >= n - 1 {
            return self.density[n - 1];
        }
        self.interpolate_density(i, omega)
    }
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

/// Normalization and g-scaled moments of the post-selected pointer,
/// centered on ω₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostSelectedMoments {
    /// Post-selection normalization relative to `|⟨ψ_f|ψ_i⟩|²`; infinite at θ = 0.
    pub z: f64,
    /// `g⟨ω − ω₀⟩′`
    pub shift_g: f64,
    /// `g²⟨(ω − ω₀)²⟩′`
    pub second_g2: f64,
    /// `second_g2 − shift_g²`
    pub variance_g2: f64,
}

impl PostSelectedMoments {
    fn from_parts(z: f64, shift_g: f64, second_g2: f64) -> Self {
        Self {
            z,
            shift_g,
            second_g2,
            variance_g2: (second_g2 - shift_g * shift_g).max(0.0),
        }
    }

    /// `√(⟨ω²⟩′ / Var[ω]′)`: how much the shot noise exceeds the pointer spread.
    pub fn shot_to_frequency_noise(&self) -> f64 {
        (self.second_g2 / self.variance_g2).sqrt()
    }
}

/// Post-selected pointer for a given coupling, weak value and initial state.
///
/// Brackets are evaluated by quadrature over the initial state, so this works
/// for any state and any coupling strength.
#[derive(Debug, Clone)]
pub struct PostSelection<'a> {
    params: CouplingParams,
    a_w: WeakValue,
    state: &'a PointerState,
    rule: QuadratureRule,
    denominator: f64,
}

impl<'a> PostSelection<'a> {
    pub fn new(params: CouplingParams, a_w: WeakValue, state: &'a PointerState) -> Result<Self> {
        Self::with_spec(params, a_w, state, QuadratureSpec::default_for(state))
    }

    pub fn with_spec(
        params: CouplingParams,
        a_w: WeakValue,
        state: &'a PointerState,
        spec: QuadratureSpec,
    ) -> Result<Self> {
        let spec = spec.with_bandwidth(2.0 * params.g);
        let rule = QuadratureRule::new(state, &spec)?;
        let mut this = Self {
            params,
            a_w,
            state,
            rule,
            denominator: 0.0,
        };
        let denominator = this.bracket_sum(|_| 1.0)?;
        if !(denominator > DEGENERACY_THRESHOLD) {
            return Err(Error::DegeneratePostSelection {
                denominator,
                threshold: DEGENERACY_THRESHOLD,
            });
        }
        this.denominator = denominator;
        Ok(this)
    }

    /// `⟨h⟩ + (|A_w|²−1)⟨h sin² gω⟩ + Im A_w ⟨h sin 2gω⟩`
    fn bracket_sum<H: Fn(f64) -> f64>(&self, h: H) -> Result<f64> {
        let g = self.params.g;
        let plain = self.rule.expect(&h)?;
        let sin_sq = self.rule.expect(|w| h(w) * (g * w).sin().powi(2))?;
        let sin_double = self.rule.expect(|w| h(w) * (2.0 * g * w).sin())?;
        Ok(plain + (self.a_w.norm_sqr() - 1.0) * sin_sq + self.a_w.im * sin_double)
    }

    /// Normalization `Z` (the denominator shared by all moments).
    pub fn denominator(&self) -> f64 {
        self.denominator
    }

    /// `⟨ωⁿ⟩′` in natural frequency units.
    pub fn raw_moment(&self, n: u32) -> Result<f64> {
        self.centered_moment(n, 0.0)
    }

    /// `⟨(ω − center)ⁿ⟩′` in natural frequency units.
    pub fn centered_moment(&self, n: u32, center: f64) -> Result<f64> {
        check_order(n)?;
        let numerator = self.bracket_sum(|w| (w - center).powi(n as i32))?;
        Ok(numerator / self.denominator)
    }

    /// First two moments about ω₀, scaled by g and g².
    pub fn moments(&self) -> Result<PostSelectedMoments> {
        let g = self.params.g;
        let center = self.params.omega0;
        let shift = self.centered_moment(1, center)?;
        let second = self.centered_moment(2, center)?;
        Ok(PostSelectedMoments::from_parts(
            self.denominator,
            g * shift,
            g * g * second,
        ))
    }

    /// `⟨ω|ρ′|ω⟩ = |Φ(ω)|² |cos gω − i A_w sin gω|² / Z`.
    pub fn pdf(&self, omega: f64) -> f64 {
        self.state.density(omega) * self.filter(omega) / self.denominator
    }

    /// `|cos gω − i A_w sin gω|²`, the post-selection filter on each frequency.
    pub fn filter(&self, omega: f64) -> f64 {
        let phase = self.params.g * omega;
        let (sin, cos) = phase.sin_cos();
        let amp = Complex64::new(cos, 0.0) - Complex64::i() * self.a_w.as_complex() * sin;
        amp.norm_sqr()
    }

    pub fn params(&self) -> &CouplingParams {
        &self.params
    }

    pub fn state(&self) -> &PointerState {
        self.state
    }
}

fn check_order(n: u32) -> Result<()> {
    if (1..=MAX_MOMENT_ORDER).contains(&n) {
        Ok(())
    } else {
        Err(Error::invalid(
            "moment order",
            format!("{n} not in [1, {MAX_MOMENT_ORDER}]"),
        ))
    }
}

/// Full-order post-selected moment `⟨ωⁿ⟩′` for an arbitrary initial state.
pub fn moment_general(
    n: u32,
    params: &CouplingParams,
    a_w: WeakValue,
    state: &PointerState,
) -> Result<f64> {
    check_order(n)?;
    PostSelection::new(*params, a_w, state)?.raw_moment(n)
}

/// Post-selected probability density at `omega`.
pub fn post_selected_pdf(
    params: &CouplingParams,
    a_w: WeakValue,
    state: &PointerState,
    omega: f64,
) -> Result<f64> {
    Ok(PostSelection::new(*params, a_w, state)?.pdf(omega))
}

/// `(⟨sin² gω⟩, ⟨sin 2gω⟩)` over the Gaussian initial state.
pub fn gaussian_trig_expectations(params: &CouplingParams) -> (f64, f64) {
    let (s, beta) = (params.s, params.beta);
    let damp = (-s).exp();
    // ½(1 − e^{−s} cos β) without cancellation at small s and β
    let sin_sq = 0.5 * (-(-s).exp_m1() + 2.0 * damp * (0.5 * beta).sin().powi(2));
    (sin_sq, damp * beta.sin())
}

/// `1 − e^{−s} cos φ`, accurate when both s and φ are small.
pub(crate) fn one_minus_damped_cos(s: f64, phi: f64) -> f64 {
    -(-s).exp_m1() + 2.0 * (-s).exp() * (0.5 * phi).sin().powi(2)
}

/// Closed-form moments for a Gaussian initial state, written in terms of
/// `θ − β` so they stay regular as θ → 0.
pub fn gaussian_moments(
    params: &CouplingParams,
    theta: SelectionAngle,
) -> Result<PostSelectedMoments> {
    let (s, beta) = (params.s, params.beta);
    let theta = theta.radians();
    let phi = theta - beta;
    let d = one_minus_damped_cos(s, phi);
    if !(d > DEGENERACY_THRESHOLD) {
        return Err(Error::DegeneratePostSelection {
            denominator: d,
            threshold: DEGENERACY_THRESHOLD,
        });
    }
    let damp = (-s).exp();
    let shift_g = -s * damp * phi.sin() / d;
    let second_g2 = 0.5 * s * (1.0 + 2.0 * s * damp * phi.cos() / d);
    let half_sin_sq = 2.0 * (0.5 * theta).sin().powi(2);
    let z = if half_sin_sq > 0.0 {
        d / half_sin_sq
    } else {
        f64::INFINITY
    };
    Ok(PostSelectedMoments::from_parts(z, shift_g, second_g2))
}

/// The same Gaussian moments expressed through a general weak value; kept as
/// an independent cross-check of [`gaussian_moments`]. Loses accuracy as
/// `|A_w|` grows.
pub fn gaussian_moments_weak_value_form(
    params: &CouplingParams,
    a_w: WeakValue,
) -> Result<PostSelectedMoments> {
    let (s, beta) = (params.s, params.beta);
    let damp = (-s).exp();
    let k = a_w.norm_sqr() - 1.0;
    let z = 1.0 + 0.5 * k * (1.0 - damp * beta.cos()) + damp * a_w.im * beta.sin();
    if !(z > DEGENERACY_THRESHOLD) {
        return Err(Error::DegeneratePostSelection {
            denominator: z,
            threshold: DEGENERACY_THRESHOLD,
        });
    }
    let shift_g = s * damp * (k * beta.sin() + 2.0 * a_w.im * beta.cos()) / (2.0 * z);
    let second_g2 = 0.5 * s * (1.0 + s * damp / z * (k * beta.cos() - 2.0 * a_w.im * beta.sin()));
    Ok(PostSelectedMoments::from_parts(z, shift_g, second_g2))
}
