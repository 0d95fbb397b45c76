//! Quadrature kernels for expectation values over the initial pointer state.
//!
//! Gaussian states are integrated with Gauss-Hermite nodes (the Gaussian is
//! the weight function, so only the smooth trigonometric/polynomial factor is
//! sampled). Tabulated states are integrated with the trapezoid rule on their
//! native grid, refined with cubic interpolation of `|Φ|²`.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::pointer::{PointerState, TabulatedState};

pub const MIN_GAUSSIAN_ORDER: usize = 16;
pub const MAX_GAUSSIAN_ORDER: usize = 512;
pub const MIN_TRAPEZOID_RESOLUTION: usize = 256;
pub const MIN_RANGE_SIGMAS: f64 = 8.0;

const MAX_TRAPEZOID_RESOLUTION: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    GaussianWeighted,
    GridTrapezoid,
}

/// How an expectation over the initial pointer state is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    scheme: Scheme,
    /// Gauss-Hermite order, or number of trapezoid intervals.
    resolution: usize,
    range_sigmas: f64,
    /// Highest angular frequency (in 1/ω units) present in the integrand.
    bandwidth: f64,
}

impl QuadratureSpec {
    pub fn new(scheme: Scheme, resolution: usize, range_sigmas: f64) -> Result<Self> {
        match scheme {
            Scheme::GaussianWeighted
                if !(MIN_GAUSSIAN_ORDER..=MAX_GAUSSIAN_ORDER).contains(&resolution) =>
            {
                return Err(Error::invalid(
                    "quadrature order",
                    format!("{resolution} not in [{MIN_GAUSSIAN_ORDER}, {MAX_GAUSSIAN_ORDER}]"),
                ))
            }
            Scheme::GridTrapezoid if resolution < MIN_TRAPEZOID_RESOLUTION => {
                return Err(Error::invalid(
                    "quadrature resolution",
                    format!("{resolution} < {MIN_TRAPEZOID_RESOLUTION}"),
                ))
            }
            _ => {}
        }
        if !(range_sigmas >= MIN_RANGE_SIGMAS) || !range_sigmas.is_finite() {
            return Err(Error::invalid(
                "range_sigmas",
                format!("{range_sigmas} must be finite and >= {MIN_RANGE_SIGMAS}"),
            ));
        }
        Ok(Self {
            scheme,
            resolution,
            range_sigmas,
            bandwidth: 0.0,
        })
    }

    /// Gauss-Hermite, order 128, truncated at 12σ.
    pub fn gaussian_default() -> Self {
        Self {
            scheme: Scheme::GaussianWeighted,
            resolution: 128,
            range_sigmas: 12.0,
            bandwidth: 0.0,
        }
    }

    pub fn trapezoid_default() -> Self {
        Self {
            scheme: Scheme::GridTrapezoid,
            resolution: 4096,
            range_sigmas: 12.0,
            bandwidth: 0.0,
        }
    }

    pub fn default_for(state: &PointerState) -> Self {
        match state {
            PointerState::Gaussian { .. } => Self::gaussian_default(),
            PointerState::Tabulated(_) => Self::trapezoid_default(),
        }
    }

    /// Declares the highest angular frequency of the integrand so that the
    /// sampling can be escalated when it would otherwise under-resolve it.
    pub fn with_bandwidth(mut self, angular_frequency: f64) -> Self {
        self.bandwidth = angular_frequency.abs();
        self
    }

    /// Same scheme with twice the order or resolution (capped for Gauss-Hermite).
    pub fn refined(mut self) -> Self {
        self.resolution = match self.scheme {
            Scheme::GaussianWeighted => (self.resolution * 2).min(MAX_GAUSSIAN_ORDER),
            Scheme::GridTrapezoid => self.resolution * 2,
        };
        self
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn range_sigmas(&self) -> f64 {
        self.range_sigmas
    }
}

/// Nodes and normalized weights such that `Σ wᵢ f(ωᵢ) ≈ ∫ f(ω)|Φ(ω)|² dω`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(state: &PointerState, spec: &QuadratureSpec) -> Result<Self> {
        match (state, spec.scheme) {
            (
                PointerState::Gaussian {
                    omega0,
                    sigma_omega,
                },
                Scheme::GaussianWeighted,
            ) => Ok(gauss_hermite_rule(*omega0, *sigma_omega, spec)),
            (
                PointerState::Gaussian {
                    omega0,
                    sigma_omega,
                },
                Scheme::GridTrapezoid,
            ) => Ok(gaussian_trapezoid_rule(*omega0, *sigma_omega, spec)),
            (PointerState::Tabulated(tab), Scheme::GridTrapezoid) => {
                Ok(tabulated_trapezoid_rule(tab, spec))
            }
            (PointerState::Tabulated(_), Scheme::GaussianWeighted) => Err(Error::invalid(
                "quadrature scheme",
                "gaussian-weighted quadrature requires a Gaussian pointer state",
            )),
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let mut acc = 0.0;
        for (&omega, &w) in self.nodes.iter().zip(&self.weights) {
            let value = f(omega);
            if !value.is_finite() {
                return Err(Error::NonFiniteIntegrand { omega, value });
            }
            acc += w * value;
        }
        Ok(acc)
    }
}

/// `∫ f(ω)|Φ(ω)|² dω` over the truncated range of `state`.
pub fn expect<F: Fn(f64) -> f64>(f: F, state: &PointerState, spec: &QuadratureSpec) -> Result<f64> {
    QuadratureRule::new(state, spec)?.expect(f)
}

fn normalize(nodes: Vec<f64>, mut weights: Vec<f64>) -> QuadratureRule {
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    QuadratureRule { nodes, weights }
}

fn gauss_hermite_rule(omega0: f64, sigma: f64, spec: &QuadratureSpec) -> QuadratureRule {
    let mut order = spec.resolution;
    // central node spacing of an order-n rule is about πσ/√n in ω
    while order < MAX_GAUSSIAN_ORDER
        && spec.bandwidth * PI * sigma / (order as f64).sqrt() > FRAC_PI_4
    {
        order = (order * 2).min(MAX_GAUSSIAN_ORDER);
    }
    let table = gauss_hermite(order);
    let half_width = spec.range_sigmas * sigma;
    let mut nodes = Vec::with_capacity(order);
    let mut weights = Vec::with_capacity(order);
    for (&x, &w) in table.nodes.iter().zip(&table.weights) {
        let offset = std::f64::consts::SQRT_2 * sigma * x;
        if offset.abs() <= half_width && w > 0.0 {
            nodes.push(omega0 + offset);
            weights.push(w);
        }
    }
    normalize(nodes, weights)
}

fn gaussian_trapezoid_rule(omega0: f64, sigma: f64, spec: &QuadratureSpec) -> QuadratureRule {
    let half_width = spec.range_sigmas * sigma;
    let mut intervals = spec.resolution;
    while intervals < MAX_TRAPEZOID_RESOLUTION
        && spec.bandwidth * 2.0 * half_width / intervals as f64 > FRAC_PI_4
    {
        intervals *= 2;
    }
    let h = 2.0 * half_width / intervals as f64;
    let density = |omega: f64| {
        let z = (omega - omega0) / sigma;
        (-0.5 * z * z).exp()
    };
    let mut nodes = Vec::with_capacity(intervals + 1);
    let mut weights = Vec::with_capacity(intervals + 1);
    for i in 0..=intervals {
        let omega = omega0 - half_width + i as f64 * h;
        let end = if i == 0 || i == intervals { 0.5 } else { 1.0 };
        nodes.push(omega);
        weights.push(end * h * density(omega));
    }
    normalize(nodes, weights)
}

fn tabulated_trapezoid_rule(tab: &TabulatedState, spec: &QuadratureSpec) -> QuadratureRule {
    let grid = tab.grid();
    let intervals = grid.len() - 1;
    let widest = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let mut per_interval = spec.resolution.div_ceil(intervals).max(1);
    if spec.bandwidth > 0.0 {
        let needed = (spec.bandwidth * widest / FRAC_PI_4).ceil() as usize;
        per_interval = per_interval.max(needed);
    }
    let mut nodes = Vec::with_capacity(intervals * per_interval + 1);
    let mut rho = Vec::with_capacity(intervals * per_interval + 1);
    for i in 0..intervals {
        let (a, b) = (grid[i], grid[i + 1]);
        let h = (b - a) / per_interval as f64;
        nodes.push(a);
        rho.push(tab.density()[i]);
        for k in 1..per_interval {
            let omega = a + k as f64 * h;
            nodes.push(omega);
            rho.push(tab.interpolate_density(i, omega));
        }
    }
    nodes.push(grid[intervals]);
    rho.push(tab.density()[intervals]);

    let last = nodes.len() - 1;
    let weights = (0..=last)
        .map(|j| {
            let left = if j == 0 { nodes[0] } else { nodes[j - 1] };
            let right = if j == last { nodes[last] } else { nodes[j + 1] };
            0.5 * (right - left) * rho[j]
        })
        .collect();
    normalize(nodes, weights)
}

/// Gauss-Hermite nodes and weights for `∫ e^{-x²} f(x) dx`.
#[derive(Debug)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Cached Gauss-Hermite table of the given order.
pub fn gauss_hermite(order: usize) -> Arc<GaussHermite> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(order)
        .or_insert_with(|| Arc::new(compute_gauss_hermite(order)))
        .clone()
}

/// Orthonormal Hermite functions `(ψ_n(x), ψ_{n-1}(x))`, Gaussian factor included.
fn hermite_functions(n: usize, x: f64) -> (f64, f64) {
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^(-1/4)
    let mut p1 = PIM4 * (-0.5 * x * x).exp();
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = x * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, p2)
}

/// Positive roots are bracketed on a grid finer than the smallest node
/// spacing, then bisected to machine resolution; the table is mirrored so it
/// is exactly symmetric.
fn compute_gauss_hermite(n: usize) -> GaussHermite {
    let nf = n as f64;
    let step = 0.25 / (2.0 * nf).sqrt();
    let upper = (2.0 * nf + 1.0).sqrt() + 1.0;
    let mut roots = Vec::with_capacity(n / 2);
    let mut a = 0.5 * step;
    let mut fa = hermite_functions(n, a).0;
    while a < upper && roots.len() < n / 2 {
        let b = a + step;
        let fb = hermite_functions(n, b).0;
        if fa == 0.0 || fa.signum() != fb.signum() {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            while hi - lo > f64::EPSILON * hi {
                let mid = 0.5 * (lo + hi);
                let fm = hermite_functions(n, mid).0;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    assert_eq!(
        roots.len(),
        n / 2,
        "Gauss-Hermite root search for order {n}"
    );

    let weight = |z: f64| {
        let prev = hermite_functions(n, z).1;
        // 2 / (2n p_{n-1}(z)^2) with the polynomial value recovered from ψ
        (-z * z).exp() / (nf * prev * prev)
    };
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for (i, &z) in roots.iter().rev().enumerate() {
        let wz = weight(z);
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = wz;
        w[n - 1 - i] = wz;
    }
    if n % 2 == 1 {
        w[n / 2] = weight(0.0);
    }
    GaussHermite {
        nodes: x,
        weights: w,
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let weight = 2.0 / ((1.0 - z * z) * pp * pp);
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    (x, w)
}
