//! Acceptance criteria. Each test prints a single `PASS`/`FAIL` line before
//! asserting, so `cargo test --test acceptance -- --nocapture` gives a
//! readable summary.

use std::io::Write;
use std::time::{Duration, Instant};

use wvalab::cli::{self, MonteCarloArgs, OutputArgs};
use wvalab::detection::{self, ExperimentBudget};
use wvalab::shot_noise::{self, FrequencyBinning};
use wvalab::snr::{self, REFERENCE_THETAS};
use wvalab::{gaussian_moments, moment_general, weak_value, CouplingParams, SelectionAngle};

const MODERATE_THETAS: [f64; 5] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0];
const BETAS: [f64; 2] = [0.0, 0.1];

fn strength_grid() -> Vec<f64> {
    snr::log_grid(1e-4, 3.0, 25).unwrap()
}

fn report(id: u32, name: &str, ok: bool, elapsed: Duration, budget: Duration, detail: &str) {
    let fast = elapsed <= budget;
    let verdict = if ok && fast { "PASS" } else { "FAIL" };
    // written to the raw stderr handle so the line survives output capture
    let _ = writeln!(
        std::io::stderr().lock(),
        "criterion {id} [{name}]: {verdict} ({:.3} s of {:.0} s) {detail}",
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    assert!(ok, "criterion {id} failed: {detail}");
    assert!(fast, "criterion {id} exceeded its runtime budget");
}

#[test]
fn criterion_1_snr_ceiling() {
    let start = Instant::now();
    let ceiling = snr::snr_max();
    let expected = (2.0 / (2.0 + 3f64.sqrt())).sqrt();
    let opt = snr::optimal_s(1e-4).unwrap();
    let at_opt = snr::snr_closed_form(opt.s_opt, 1e-4, 1.0).unwrap();
    let ok = (ceiling - expected).abs() < 1e-15
        && (ceiling - 0.732).abs() < 1e-3
        && at_opt >= 0.731
        && at_opt <= ceiling;
    report(
        1,
        "snr ceiling",
        ok,
        start.elapsed(),
        Duration::from_secs(1),
        &format!("snr_max={ceiling:.10} snr(s_opt, 1e-4)={at_opt:.10}"),
    );
}

#[test]
fn criterion_2_optimality_condition() {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = String::new();
    for theta in REFERENCE_THETAS {
        let opt = snr::optimal_s(theta).unwrap();
        let residual = snr::optimality_residual(opt.s_opt, theta).abs();
        ok &= residual < 1e-12;
        let expansion = (1.0 - theta.cos()) / 3f64.sqrt();
        let rel = (opt.s_opt / expansion - 1.0).abs();
        if theta <= 1e-2 {
            ok &= rel < 0.01;
        }
        detail.push_str(&format!(
            "θ={theta:e}: s={:.6e} res={residual:.1e} dev={rel:.1e}; ",
            opt.s_opt
        ));
    }
    report(
        2,
        "optimality condition",
        ok,
        start.elapsed(),
        Duration::from_secs(1),
        &detail,
    );
}

#[test]
fn criterion_3_closed_form_matches_quadrature() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut at = (0.0, 0.0, 0.0);
    for &beta in &BETAS {
        for &theta in &MODERATE_THETAS {
            let angle = SelectionAngle::new(theta).unwrap();
            let a_w = weak_value(angle).unwrap();
            for &s in &strength_grid() {
                let p = CouplingParams::dimensionless(s, beta).unwrap();
                let state = p.gaussian_state();
                let (g, w0) = (p.g(), p.omega0());
                let m = gaussian_moments(&p, angle).unwrap();
                let first = w0 + m.shift_g / g;
                let second = w0 * w0 + 2.0 * w0 * m.shift_g / g + m.second_g2 / (g * g);
                let q1 = moment_general(1, &p, a_w, &state).unwrap();
                let q2 = moment_general(2, &p, a_w, &state).unwrap();
                for rel in [
                    (q1 - first).abs() / first.abs(),
                    (q2 - second).abs() / second.abs(),
                ] {
                    if rel > worst {
                        worst = rel;
                        at = (s, theta, beta);
                    }
                }
            }
        }
    }
    report(
        3,
        "closed form vs quadrature",
        worst < 1e-9,
        start.elapsed(),
        Duration::from_secs(10),
        &format!("max rel dev {worst:.2e} at (s, θ, β)={at:?}"),
    );
}

#[test]
fn criterion_4_shot_noise_exceeds_frequency_noise() {
    let start = Instant::now();
    let mut ordered = true;
    let mut max_ratio: f64 = 0.0;
    for &theta in &MODERATE_THETAS {
        let angle = SelectionAngle::new(theta).unwrap();
        for &s in &strength_grid() {
            let p = CouplingParams::dimensionless(s, 0.0).unwrap();
            let m = gaussian_moments(&p, angle).unwrap();
            ordered &= m.second_g2 >= m.variance_g2;
            max_ratio = max_ratio.max(m.shot_to_frequency_noise());
        }
    }
    let ok = ordered && (1.40..=1.50).contains(&max_ratio);
    report(
        4,
        "shot vs frequency noise",
        ok,
        start.elapsed(),
        Duration::from_secs(10),
        &format!("ordered={ordered} max ratio={max_ratio:.4}"),
    );
}

#[test]
fn criterion_5_monte_carlo_variance_and_snr() {
    let start = Instant::now();
    let theta = 0.1;
    let n_out = 1e4;
    let s = snr::optimal_s(theta).unwrap().s_opt;
    let params = CouplingParams::dimensionless(s, 0.0).unwrap();
    let state = params.gaussian_state();
    let a_w = weak_value(SelectionAngle::new(theta).unwrap()).unwrap();
    let binning = FrequencyBinning::default_for(&params, &state).unwrap();
    let run = shot_noise::run(
        &params,
        a_w,
        &state,
        &binning,
        n_out,
        2000,
        cli::DEFAULT_SEED,
    )
    .unwrap();

    let g = params.g();
    let m = gaussian_moments(&params, SelectionAngle::new(theta).unwrap()).unwrap();
    let predicted_variance = m.second_g2 / (g * g) / n_out;
    let predicted_snr = snr::snr_closed_form(s, theta, n_out).unwrap();
    let var_dev = run.empirical_variance / predicted_variance - 1.0;
    let snr_dev = run.empirical_snr / predicted_snr - 1.0;
    let ok = var_dev.abs() <= 0.06 && snr_dev.abs() <= 0.05;
    report(
        5,
        "monte carlo",
        ok,
        start.elapsed(),
        Duration::from_secs(60),
        &format!(
            "variance dev {var_dev:+.4} snr dev {snr_dev:+.4} (seed {})",
            cli::DEFAULT_SEED
        ),
    );
}

#[test]
fn criterion_6_figure_data() {
    let start = Instant::now();
    // The default sweep starts at s = 1e-8, above the SNR optimum for
    // θ = 1e-4 (about 2.9e-9). Extend it down to 1e-10 at the same density so
    // every curve has its peak inside the grid.
    let grid = snr::log_grid(1e-10, snr::DEFAULT_S_MAX, 489).unwrap();
    let rows = snr::sweep(&grid, &REFERENCE_THETAS, 0.0).unwrap();
    let n = grid.len();
    let curves: Vec<_> = rows.chunks(n).collect();

    // shift: unique interior maximum of |shift|, peak growing with θ
    let mut fig2 = true;
    let mut peaks = Vec::new();
    for curve in &curves {
        let mag: Vec<f64> = curve.iter().map(|p| p.shift_g.abs()).collect();
        let (imax, &peak) = mag
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        fig2 &= imax > 0 && imax < n - 1;
        fig2 &= mag[..=imax].windows(2).all(|w| w[1] >= w[0]);
        fig2 &= mag[imax..].windows(2).all(|w| w[1] <= w[0]);
        peaks.push(peak);
    }
    fig2 &= peaks.windows(2).all(|w| w[1] > w[0]);

    // second moment: θ-independent within 5% for s ≤ 1
    let mut fig3_spread: f64 = 0.0;
    let mut fig3_at = 0.0;
    for i in 0..n {
        if grid[i] > 1.0 {
            break;
        }
        let values: Vec<f64> = curves.iter().map(|c| c[i].second_g2).collect();
        let hi = values.iter().cloned().fold(f64::MIN, f64::max);
        let lo = values.iter().cloned().fold(f64::MAX, f64::min);
        if hi / lo - 1.0 > fig3_spread {
            fig3_spread = hi / lo - 1.0;
            fig3_at = grid[i];
        }
    }
    let fig3 = fig3_spread < 0.05;

    // SNR: peak within one grid step of the optimum
    let mut fig4 = true;
    for (curve, &theta) in curves.iter().zip(&REFERENCE_THETAS) {
        let imax = curve
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.snr_single_photon.total_cmp(&b.1.snr_single_photon))
            .unwrap()
            .0;
        let s_opt = snr::optimal_s(theta).unwrap().s_opt;
        let lo = grid[imax.saturating_sub(1)];
        let hi = grid[(imax + 1).min(n - 1)];
        fig4 &= lo <= s_opt && s_opt <= hi;
    }

    report(
        6,
        "figure data",
        fig2 && fig3 && fig4,
        start.elapsed(),
        Duration::from_secs(10),
        &format!(
            "shift curves ok={fig2} second-moment max spread={:.1}% at s={fig3_at:.3e} (ok={fig3}) snr peaks ok={fig4}",
            100.0 * fig3_spread
        ),
    );
}

#[test]
fn criterion_7_detection_limit() {
    let start = Instant::now();
    let n_in = detection::photons_from_energy(1.0, 1e-6).unwrap();
    let budget = ExperimentBudget::new(n_in, 1e-6, 1.0, 1e-3).unwrap();
    let limit = detection::detection_limit(&budget).unwrap();
    let factor = limit.ell_min / 1.5e-17;
    let round_trip = (limit.snr_at_threshold - 1.0).abs();
    let ok = (0.5..=2.0).contains(&factor) && round_trip < 1e-10;
    report(
        7,
        "detection limit",
        ok,
        start.elapsed(),
        Duration::from_secs(1),
        &format!(
            "n_in={n_in:.4e} ell_min={:.4e} m (x{factor:.3} of 1.5e-17) round trip err={round_trip:.1e}",
            limit.ell_min
        ),
    );
}

#[test]
fn criterion_8_weak_limit_shift() {
    let start = Instant::now();
    let s = 1e-6;
    let mut ok = true;
    let mut detail = String::new();
    for theta in [1e-2, 1e-1] {
        let p = CouplingParams::dimensionless(s, 0.0).unwrap();
        let m = gaussian_moments(&p, SelectionAngle::new(theta).unwrap()).unwrap();
        let ratio = m.shift_g / (-s / (0.5 * theta).tan());
        ok &= (0.999..=1.001).contains(&ratio);
        detail.push_str(&format!("θ={theta:e}: ratio={ratio:.6}; "));
    }
    report(
        8,
        "weak-limit shift",
        ok,
        start.elapsed(),
        Duration::from_secs(1),
        &detail,
    );
}

#[test]
fn criterion_9_monte_carlo_is_deterministic() {
    let start = Instant::now();
    let args = MonteCarloArgs {
        theta: None,
        s: None,
        beta: None,
        n_out: None,
        trials: None,
        seed: Some(7),
        bins: None,
        half_width: None,
        normalization: None,
        dump: None,
        output: OutputArgs {
            format: None,
            out: None,
            config: None,
        },
    };
    let a = cli::cmd_montecarlo(&args).unwrap().text;
    let b = cli::cmd_montecarlo(&args).unwrap().text;
    report(
        9,
        "determinism",
        a.as_bytes() == b.as_bytes() && !a.is_empty(),
        start.elapsed(),
        Duration::from_secs(60),
        &format!("{} bytes per run", a.len()),
    );
}
