use eqkd::detection::{clicks_from_distribution, p_count, Outcome};
use eqkd::fockstate::number_distribution;
use eqkd::keyrate::{binary_entropy, skr, MetricsConfig};
use eqkd::linkapps::fiber_distance;
use eqkd::*;
use proptest::prelude::*;

fn det(eta: f64, n: f64) -> DetectorSpec {
    DetectorSpec::new(eta, n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn click_probability_matches_series(i in 0u32..=10, eta in 0.0f64..=1.0, n in 0.0f64..=0.1) {
        let series: f64 = (1..80).map(|k| p_count(k, i, det(eta, n))).sum();
        let closed = p_click(i, det(eta, n));
        prop_assert!((series - closed).abs() < 1e-12);
        prop_assert!((closed - (1.0 - (-n).exp() * (1.0 - eta).powi(i as i32))).abs() < 1e-15);
    }

    #[test]
    fn click_probability_is_monotone(i in 0u32..10, eta in 0.0f64..0.99, n in 0.0f64..0.09) {
        let base = p_click(i, det(eta, n));
        prop_assert!(p_click(i + 1, det(eta, n)) >= base);
        prop_assert!(p_click(i, det(eta + 0.01, n)) >= base);
        prop_assert!(p_click(i, det(eta, n + 0.01)) >= base);
    }

    #[test]
    fn source_state_is_normalized(eps in 0.0f64..0.6, trunc in 2usize..=5) {
        if let Ok(s) = spdc_state(SqueezingParam::new(eps).unwrap(), trunc) {
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
            prop_assert!(s.leakage() <= 0.05);
            let t = eps.tanh().powi(2);
            let expected = 1.0 - (1.0 - t.powi(trunc as i32 + 1)).powi(2);
            prop_assert!((s.leakage() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_preserves_mass_below_truncation(eps in 0.0f64..0.3) {
        let s = spdc_state(SqueezingParam::new(eps).unwrap(), 4).unwrap();
        let r = rotate_basis(&rotate_basis(&s, Party::Alice), Party::Bob);
        prop_assert!(r.norm_sqr() <= 1.0 + 1e-12);
        prop_assert!(r.leakage() >= s.leakage() - 1e-12);
    }

    #[test]
    fn click_tables_are_distributions(
        eps in 0.0f64..0.6,
        eta_a in 0.0f64..=1.0,
        eta_b in 0.0f64..=1.0,
        d_a in 0.0f64..0.1,
        d_b in 0.0f64..0.1,
    ) {
        let link = LinkParams::new(eta_a, eta_b, d_a, d_b, 1e-9).unwrap();
        let state = spdc_state(SqueezingParam::new(eps).unwrap(), 3).unwrap();
        for (ba, bb) in [(Basis::Z, Basis::Z), (Basis::X, Basis::X), (Basis::Z, Basis::X)] {
            let j = joint_click_distribution(&state, ba, bb, &link).unwrap();
            let total: f64 = j.total();
            let norm = if ba == bb && ba == Basis::Z { 1.0 } else { total };
            prop_assert!((total - norm).abs() < 1e-9);
            prop_assert!(j.table.iter().flatten().all(|&p| p >= -1e-15));
        }
        let zz = joint_click_distribution(&state, Basis::Z, Basis::Z, &link).unwrap();
        prop_assert!((zz.total() - 1.0).abs() < 1e-9);
        prop_assert!(zz.get(Outcome::None, Outcome::None) > 0.0 || d_a > 0.0 || d_b > 0.0 || eps > 0.0);
    }

    #[test]
    fn metrics_stay_in_range(
        eps in 0.0f64..0.8,
        eta in 0.0f64..=1.0,
        d in 0.0f64..0.1,
    ) {
        let link = LinkParams::symmetric(eta, d, 1e-9).unwrap();
        if let Ok(s) = spdc_state(SqueezingParam::new(eps).unwrap(), 3) {
            let m = compute_metrics(&s, &link).unwrap();
            prop_assert!((0.0..=1.0).contains(&m.q_coinc));
            prop_assert!((0.0..=0.5).contains(&m.delta1));
            prop_assert!((0.0..=0.5).contains(&m.delta2));
            prop_assert!(m.skr_per_second >= 0.0);
            prop_assert!(m.skr_per_window <= 0.5 * m.q_coinc + 1e-15);
        }
    }

    #[test]
    fn metrics_are_party_symmetric(
        eps in 0.01f64..0.6,
        eta_a in 0.0f64..=1.0,
        eta_b in 0.0f64..=1.0,
        d_a in 0.0f64..0.05,
        d_b in 0.0f64..0.05,
    ) {
        let s = spdc_state(SqueezingParam::new(eps).unwrap(), 3).unwrap();
        let link = LinkParams::new(eta_a, eta_b, d_a, d_b, 1e-9).unwrap();
        let p = PreparedState::from_state(&s);
        let m1 = p.metrics(&link, MetricsConfig::default());
        let m2 = p.metrics(&link.swapped(), MetricsConfig::default());
        prop_assert!((m1.q_coinc - m2.q_coinc).abs() < 1e-12);
        prop_assert!((m1.delta1 - m2.delta1).abs() < 1e-12);
        prop_assert!((m1.skr_per_window - m2.skr_per_window).abs() < 1e-12);
    }

    #[test]
    fn darks_never_help(eps in 0.05f64..0.6, eta in 0.05f64..=1.0, d in 0.0f64..0.05, extra in 1e-4f64..0.05) {
        let s = spdc_state(SqueezingParam::new(eps).unwrap(), 3).unwrap();
        let quiet = compute_metrics(&s, &LinkParams::symmetric(eta, d, 1e-9).unwrap()).unwrap();
        let noisy = compute_metrics(&s, &LinkParams::symmetric(eta, d + extra, 1e-9).unwrap()).unwrap();
        prop_assert!(noisy.delta1 >= quiet.delta1 - 1e-12);
        prop_assert!(noisy.skr_per_window <= quiet.skr_per_window + 1e-12);
    }

    #[test]
    fn entropy_is_symmetric_and_bounded(x in 0.0f64..=1.0) {
        let h = binary_entropy(x).unwrap();
        prop_assert!((0.0..=1.0).contains(&h));
        prop_assert!((h - binary_entropy(1.0 - x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn key_rate_without_errors_is_half_q(q in 0.0f64..=1.0) {
        prop_assert_eq!(skr(q, 0.0, 0.0).unwrap(), q / 2.0);
    }

    #[test]
    fn model_symmetry_and_dark_slope(
        eta_a in 0.0f64..=1.0,
        eta_b in 0.0f64..=1.0,
        d_a in 0.0f64..0.1,
        d_b in 0.0f64..0.1,
        extra in 0.0f64..0.05,
    ) {
        for k in [ModelConstants::PRINTED, ModelConstants::TABULATED] {
            let p = eval_optimal_tf(eta_a, eta_b, d_a, d_b, &k).unwrap().p_tf;
            prop_assert_eq!(p, eval_optimal_tf(eta_b, eta_a, d_b, d_a, &k).unwrap().p_tf);
            let q = eval_optimal_tf(eta_a, eta_b, d_a + extra, d_b, &k).unwrap().p_tf;
            prop_assert!((p - q - k.b * extra).abs() < 1e-14);
        }
    }

    #[test]
    fn noise_budget_bounds(eta_a in 0.0f64..=1.0, eta_b in 0.0f64..=1.0) {
        prop_assume!(eta_a + eta_b > 0.0);
        let v = noise_budget(eta_a, eta_b).unwrap();
        prop_assert_eq!(v, noise_budget(eta_b, eta_a).unwrap());
        prop_assert!(v >= 0.0366 * eta_a.min(eta_b) - 1e-16);
        prop_assert!(v <= 0.0732 * eta_a.min(eta_b) + 1e-16);
    }

    #[test]
    fn fiber_distance_scaling(budget in 0.0f64..100.0, atten in 0.01f64..30.0, k in 0.1f64..10.0) {
        let base = fiber_distance(budget, atten).unwrap();
        prop_assert!((fiber_distance(k * budget, atten).unwrap() - k * base).abs() <= 1e-9 * (1.0 + base * k));
        prop_assert!((fiber_distance(budget, k * atten).unwrap() - base / k).abs() <= 1e-9 * (1.0 + base / k));
    }
}

#[test]
fn number_distribution_sums_to_one() {
    for eps in [0.0, 0.1, 0.3, 0.5] {
        let s = spdc_state(SqueezingParam::new(eps).unwrap(), 3).unwrap();
        assert!((number_distribution(&s).total() - 1.0).abs() < 1e-12);
        let link = LinkParams::symmetric(0.7, 1e-3, 1e-9).unwrap();
        let j = clicks_from_distribution(&number_distribution(&s), &link);
        assert!((j.total() - 1.0).abs() < 1e-12);
    }
}
