use proptest::prelude::*;

use wvalab::pointer::PostSelection;
use wvalab::snr;
use wvalab::{gaussian_moments, weak_value, CouplingParams, SelectionAngle};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn variance_is_non_negative_and_bounded_by_shot_noise(
        log_s in -8.0f64..0.5,
        theta in 1e-4f64..3.0,
        beta in -0.5f64..0.5,
    ) {
        let s = 10f64.powf(log_s);
        let p = CouplingParams::dimensionless(s, beta).unwrap();
        if let Ok(m) = gaussian_moments(&p, SelectionAngle::new(theta).unwrap()) {
            prop_assert!(m.variance_g2 >= 0.0);
            prop_assert!(m.second_g2 >= m.variance_g2);
            prop_assert!(m.second_g2 > 0.0);
        }
    }

    #[test]
    fn snr_never_exceeds_ceiling(log_s in -10.0f64..1.0, theta in 1e-5f64..3.1) {
        let s = 10f64.powf(log_s);
        let v = snr::snr_closed_form(s, theta, 1.0).unwrap();
        prop_assert!((0.0..=snr::snr_max() + 1e-12).contains(&v));
    }

    #[test]
    fn snr_matches_moment_ratio(log_s in -6.0f64..0.5, theta in 1e-3f64..3.0) {
        let s = 10f64.powf(log_s);
        let p = CouplingParams::dimensionless(s, 0.0).unwrap();
        let m = gaussian_moments(&p, SelectionAngle::new(theta).unwrap()).unwrap();
        let from_moments = m.shift_g.abs() / m.second_g2.sqrt();
        let closed = snr::snr_closed_form(s, theta, 1.0).unwrap();
        prop_assert!((from_moments - closed).abs() <= 1e-12 * closed.max(1e-300));
    }

    #[test]
    fn quadrature_matches_closed_form(
        log_s in -4.0f64..0.4,
        theta in 1e-3f64..2.5,
        beta in 0.0f64..0.3,
    ) {
        let s = 10f64.powf(log_s);
        let angle = SelectionAngle::new(theta).unwrap();
        let p = CouplingParams::dimensionless(s, beta).unwrap();
        let state = p.gaussian_state();
        let exact = gaussian_moments(&p, angle).unwrap();
        let quad = PostSelection::new(p, weak_value(angle).unwrap(), &state)
            .unwrap()
            .moments()
            .unwrap();
        // the shift passes through zero at θ = β, so compare on the pointer width
        let scale = exact.second_g2.sqrt();
        prop_assert!((quad.shift_g - exact.shift_g).abs() <= 1e-9 * scale);
        prop_assert!((quad.second_g2 / exact.second_g2 - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn optimum_is_a_local_maximum(theta in 1e-4f64..1.0) {
        let opt = snr::optimal_s(theta).unwrap();
        let peak = snr::snr_closed_form(opt.s_opt, theta, 1.0).unwrap();
        for f in [0.9, 1.1] {
            prop_assert!(snr::snr_closed_form(f * opt.s_opt, theta, 1.0).unwrap() < peak);
        }
    }
}
