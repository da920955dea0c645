use magsob::period_integrals::flux_integral;
use magsob::profile::{bracket_roots, critical_point, eval_f, gamma_max};
use magsob::reconstruct::sample_minimizer;
use magsob::solver::{constant_value, sharp_constant, Regime, SolverConfig};
use magsob::QuadratureConfig;
use proptest::prelude::*;
use std::f64::consts::PI;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn flux_is_gauge_invariant_and_even(q in 2.5f64..12.0, alpha in -0.499f64..0.499, k in -3i32..=3) {
        let cfg = SolverConfig::default();
        let base = sharp_constant(q, alpha, &cfg).unwrap().mu;
        let shifted = sharp_constant(q, alpha + k as f64, &cfg).unwrap().mu;
        let mirrored = sharp_constant(q, -alpha, &cfg).unwrap().mu;
        prop_assert!((base - shifted).abs() <= 1e-9 * base);
        prop_assert!((base - mirrored).abs() <= 1e-12 * base);
    }

    #[test]
    fn mu_never_exceeds_constant_value(q in 2.5f64..12.0, alpha in 0.0f64..0.499) {
        let sc = sharp_constant(q, alpha, &SolverConfig::default()).unwrap();
        let c = constant_value(q, alpha);
        prop_assert!(sc.mu <= c * (1.0 + 1e-14));
        if sc.regime == Regime::SymmetryBroken {
            prop_assert!(sc.mu < c);
            prop_assert!(sc.mu > 0.0);
        }
    }

    #[test]
    fn roots_bracket_the_critical_point(q in 2.2f64..14.0, frac in 1e-6f64..0.999_999) {
        let gamma = frac * gamma_max(q).unwrap();
        let (t1, t2) = bracket_roots(gamma, q).unwrap();
        let t0 = critical_point(gamma, q).unwrap();
        prop_assert!(1.0 < t1 && t1 < t0 && t0 < t2 && t2 < gamma.powf(-2.0 / q));
        for t in [t1, t2] {
            // f vanishes to roundoff relative to its terms
            prop_assert!(eval_f(t, gamma, q).unwrap().abs() <= 1e-12 * t);
        }
    }

    #[test]
    fn flux_integral_is_decreasing_between_its_limits(q in 2.5f64..12.0, a in 0.001f64..0.999, b in 0.001f64..0.999) {
        prop_assume!((a - b).abs() > 1e-3);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let gmax = gamma_max(q).unwrap();
        let cfg = QuadratureConfig::default();
        let m_lo = flux_integral(lo * gmax, q, &cfg).unwrap();
        let m_hi = flux_integral(hi * gmax, q, &cfg).unwrap();
        prop_assert!(m_lo > m_hi);
        let floor = 2.0 * PI / (q + 2.0).sqrt();
        prop_assert!(m_hi > floor && m_lo < PI);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn modulus_stays_between_turning_points(q in 3.0f64..8.0, excess in 0.01f64..0.9) {
        let a_star = 1.0 / (q + 2.0).sqrt();
        let alpha = a_star + excess * (0.5 - a_star);
        let sol = sharp_constant(q, alpha, &SolverConfig::default()).unwrap().detail.unwrap();
        let sample = sample_minimizer(&sol, 128, &QuadratureConfig::default()).unwrap();
        let tol = 1e-12 * sol.r2;
        prop_assert!(sample.r.iter().all(|&r| r >= sol.r1 - tol && r <= sol.r2 + tol));
        prop_assert!((sample.r[0] - sol.r1).abs() <= tol);
        prop_assert!((sample.r[64] - sol.r2).abs() <= tol);
    }
}
