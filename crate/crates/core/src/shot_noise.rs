//! Monte Carlo photon counting on a multi-channel spectrometer.
//!
//! Each frequency bin receives an independent Poisson count whose mean is
//! the post-selected spectrum `n̄(ω) = N_out ⟨ω|ρ′|ω⟩`. The pointer shift
//! estimate of one trial is `(1/N_out) Σ_b (ω_b − ω₀) n_b` with the expected
//! `N_out` in the denominator, so its variance is `⟨(ω−ω₀)²⟩′ / N_out`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pointer::{CouplingParams, PointerState, PostSelection, WeakValue};
use crate::quadrature::gauss_legendre;

pub const MIN_BINS: usize = 16;
pub const MIN_HALF_WIDTH_SIGMAS: f64 = 6.0;
pub const DEFAULT_BINS: usize = 256;
pub const DEFAULT_HALF_WIDTH_SIGMAS: f64 = 8.0;
pub const MIN_TRIALS: usize = 100;

/// Above this mean the Poisson draw uses a rounded normal approximation.
pub const EXACT_POISSON_LIMIT: f64 = 1e6;

const BIN_QUADRATURE_POINTS: usize = 8;

/// Uniform spectrometer channels centered on ω₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyBinning {
    center: f64,
    sigma: f64,
    half_width_sigmas: f64,
    bins: usize,
}

impl FrequencyBinning {
    pub fn new(center: f64, sigma: f64, half_width_sigmas: f64, bins: usize) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::invalid("center", "must be finite"));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid("sigma", format!("{sigma} must be > 0")));
        }
        if !(half_width_sigmas >= MIN_HALF_WIDTH_SIGMAS) || !half_width_sigmas.is_finite() {
            return Err(Error::invalid(
                "half_width_sigmas",
                format!("{half_width_sigmas} < {MIN_HALF_WIDTH_SIGMAS}"),
            ));
        }
        if bins < MIN_BINS {
            return Err(Error::invalid("bins", format!("{bins} < {MIN_BINS}")));
        }
        Ok(Self {
            center,
            sigma,
            half_width_sigmas,
            bins,
        })
    }

    /// 256 bins over ±8σ around ω₀.
    pub fn default_for(params: &CouplingParams, state: &PointerState) -> Result<Self> {
        Self::new(
            params.omega0(),
            state.std_dev(),
            DEFAULT_HALF_WIDTH_SIGMAS,
            DEFAULT_BINS,
        )
    }

    pub fn with_bins(self, bins: usize) -> Result<Self> {
        Self::new(self.center, self.sigma, self.half_width_sigmas, bins)
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn half_width_sigmas(&self) -> f64 {
        self.half_width_sigmas
    }

    pub fn width(&self) -> f64 {
        2.0 * self.half_width_sigmas * self.sigma / self.bins as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        let lo = self.center - self.half_width_sigmas * self.sigma;
        let w = self.width();
        (0..=self.bins).map(|i| lo + w * i as f64).collect()
    }

    pub fn centers(&self) -> Vec<f64> {
        let lo = self.center - self.half_width_sigmas * self.sigma;
        let w = self.width();
        (0..self.bins).map(|i| lo + w * (i as f64 + 0.5)).collect()
    }
}

/// Mean photon count per bin.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedSpectrum {
    center: f64,
    bin_centers: Vec<f64>,
    mean_counts: Vec<f64>,
    n_out: f64,
}

impl ExpectedSpectrum {
    /// Spectrum from explicit bin means; `n_out` is their sum.
    pub fn new(center: f64, bin_centers: Vec<f64>, mean_counts: Vec<f64>) -> Result<Self> {
        if bin_centers.len() != mean_counts.len() || bin_centers.is_empty() {
            return Err(Error::invalid(
                "mean_counts",
                "length must match bin centers",
            ));
        }
        if mean_counts.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
            return Err(Error::invalid(
                "mean_counts",
                "must be finite and non-negative",
            ));
        }
        let n_out: f64 = mean_counts.iter().sum();
        if !(n_out > 0.0) {
            return Err(Error::invalid("n_out", "spectrum is empty"));
        }
        Ok(Self {
            center,
            bin_centers,
            mean_counts,
            n_out,
        })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn bin_centers(&self) -> &[f64] {
        &self.bin_centers
    }

    pub fn mean_counts(&self) -> &[f64] {
        &self.mean_counts
    }

    pub fn n_out(&self) -> f64 {
        self.n_out
    }

    /// Binned `⟨(ω−ω₀)ᵏ⟩′` for k = 1, 2.
    pub fn moments(&self) -> (f64, f64) {
        let (mut m1, mut m2) = (0.0, 0.0);
        for (&w, &n) in self.bin_centers.iter().zip(&self.mean_counts) {
            let d = w - self.center;
            m1 += d * n;
            m2 += d * d * n;
        }
        (m1 / self.n_out, m2 / self.n_out)
    }
}

/// Bins the post-selected distribution: each bin mean is `n_out` times the
/// probability in that bin. Probability outside the binned window is folded
/// back by renormalizing to `n_out`.
pub fn expected_spectrum(
    params: &CouplingParams,
    a_w: WeakValue,
    state: &PointerState,
    binning: &FrequencyBinning,
    n_out: f64,
) -> Result<ExpectedSpectrum> {
    if !(n_out > 0.0) || !n_out.is_finite() {
        return Err(Error::invalid(
            "n_out",
            format!("{n_out} must be finite and > 0"),
        ));
    }
    let selection = PostSelection::new(*params, a_w, state)?;
    let (x, w) = gauss_legendre(BIN_QUADRATURE_POINTS);
    let width = binning.width();
    // split bins whose width spans too much of the filter's oscillation
    let sub = ((2.0 * params.g().abs() * width) / std::f64::consts::FRAC_PI_4)
        .ceil()
        .max(1.0) as usize;
    let sub_width = width / sub as f64;
    let edges = binning.edges();
    let masses: Vec<f64> = edges
        .windows(2)
        .map(|e| {
            let mut mass = 0.0;
            for k in 0..sub {
                let a = e[0] + k as f64 * sub_width;
                let mid = a + 0.5 * sub_width;
                for (xi, wi) in x.iter().zip(&w) {
                    mass += 0.5 * sub_width * wi * selection.pdf(mid + 0.5 * sub_width * xi);
                }
            }
            mass
        })
        .collect();
    let total: f64 = masses.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::DegeneratePostSelection {
            denominator: total,
            threshold: 0.0,
        });
    }
    let mean_counts = masses.iter().map(|m| n_out * m / total).collect();
    Ok(ExpectedSpectrum {
        center: binning.center(),
        bin_centers: binning.centers(),
        mean_counts,
        n_out,
    })
}

/// Denominator of the per-trial shift estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Divide by the expected photon number (the convention the analytic
    /// variance refers to).
    #[default]
    Expected,
    /// Divide by the realized total count of the trial.
    Realized,
}

/// Independent stream for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// One Poisson draw; exact below [`EXACT_POISSON_LIMIT`], rounded normal above.
pub fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    if mean < EXACT_POISSON_LIMIT {
        match Poisson::new(mean) {
            Ok(dist) => dist.sample(rng),
            Err(_) => 0.0,
        }
    } else {
        let z: f64 = StandardNormal.sample(rng);
        (mean + mean.sqrt() * z + 0.5).floor().max(0.0)
    }
}

/// Shift estimate `ω̃ − ω₀` of one simulated exposure.
pub fn sample_trial<R: Rng + ?Sized>(spectrum: &ExpectedSpectrum, rng: &mut R) -> f64 {
    sample_trial_with(spectrum, rng, Normalization::Expected)
}

pub fn sample_trial_with<R: Rng + ?Sized>(
    spectrum: &ExpectedSpectrum,
    rng: &mut R,
    normalization: Normalization,
) -> f64 {
    let mut weighted = 0.0;
    let mut total = 0.0;
    for (&w, &mean) in spectrum.bin_centers.iter().zip(&spectrum.mean_counts) {
        let n = poisson_count(mean, rng);
        weighted += (w - spectrum.center) * n;
        total += n;
    }
    match normalization {
        Normalization::Expected => weighted / spectrum.n_out,
        Normalization::Realized if total > 0.0 => weighted / total,
        Normalization::Realized => 0.0,
    }
}

/// Result of a Monte Carlo run, in natural frequency units.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotNoiseRun {
    pub seed: u64,
    pub trials: usize,
    pub n_out: f64,
    /// Coupling `g`, for converting to g-scaled units.
    pub g: f64,
    pub shift_estimates: Vec<f64>,
    pub empirical_mean: f64,
    pub empirical_variance: f64,
    /// `⟨ω − ω₀⟩′`
    pub analytic_shift: f64,
    /// `⟨(ω − ω₀)²⟩′ / N_out`
    pub analytic_variance: f64,
    pub empirical_snr: f64,
    pub analytic_snr: f64,
}

impl ShotNoiseRun {
    pub fn variance_ratio(&self) -> f64 {
        self.empirical_variance / self.analytic_variance
    }

    pub fn snr_ratio(&self) -> f64 {
        self.empirical_snr / self.analytic_snr
    }
}

#[allow(clippy::too_many_arguments)]
pub fn run(
    params: &CouplingParams,
    a_w: WeakValue,
    state: &PointerState,
    binning: &FrequencyBinning,
    n_out: f64,
    trials: usize,
    seed: u64,
) -> Result<ShotNoiseRun> {
    run_with(
        params,
        a_w,
        state,
        binning,
        n_out,
        trials,
        seed,
        Normalization::Expected,
    )
}

/// Runs `trials` independent exposures. Trial `i` draws from
/// `trial_rng(seed, i)` and aggregation is in trial order, so the result
/// does not depend on the number of worker threads.
#[allow(clippy::too_many_arguments)]
pub fn run_with(
    params: &CouplingParams,
    a_w: WeakValue,
    state: &PointerState,
    binning: &FrequencyBinning,
    n_out: f64,
    trials: usize,
    seed: u64,
    normalization: Normalization,
) -> Result<ShotNoiseRun> {
    if trials < MIN_TRIALS {
        return Err(Error::invalid("trials", format!("{trials} < {MIN_TRIALS}")));
    }
    let spectrum = expected_spectrum(params, a_w, state, binning, n_out)?;
    let selection = PostSelection::new(*params, a_w, state)?;
    let analytic_shift = selection.centered_moment(1, binning.center())?;
    let analytic_second = selection.centered_moment(2, binning.center())?;

    let shift_estimates: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| sample_trial_with(&spectrum, &mut trial_rng(seed, t), normalization))
        .collect();

    let count = trials as f64;
    let empirical_mean = shift_estimates.iter().sum::<f64>() / count;
    let empirical_variance = shift_estimates
        .iter()
        .map(|x| (x - empirical_mean).powi(2))
        .sum::<f64>()
        / (count - 1.0);
    let empirical_snr = if empirical_variance > 0.0 {
        empirical_mean.abs() / empirical_variance.sqrt()
    } else {
        0.0
    };
    Ok(ShotNoiseRun {
        seed,
        trials,
        n_out,
        g: params.g(),
        shift_estimates,
        empirical_mean,
        empirical_variance,
        analytic_shift,
        analytic_variance: analytic_second / n_out,
        empirical_snr,
        analytic_snr: n_out.sqrt() * analytic_shift.abs() / analytic_second.sqrt(),
    })
}
