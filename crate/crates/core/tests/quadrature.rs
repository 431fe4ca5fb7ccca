use hmpsbm::quadrature::GaussHermite;
use hmpsbm::vb::projected_expectations;
use hmpsbm_oracle::suites::quadrature_suite;
use proptest::prelude::*;

#[test]
fn quadrature_agrees_with_monte_carlo() {
    let check = quadrature_suite(8, 200_000, 4.0, 3);
    assert_eq!(check.comparisons, 48);
    assert_eq!(check.violations, 0, "{check:?}");
}

#[test]
fn zero_variance_is_point_evaluation() {
    let rule = GaussHermite::<f64>::new(32).unwrap();
    let e = projected_expectations(0.0, 0.0, &rule);
    assert!((e.e_log_phi - 0.5f64.ln()).abs() < 1e-15);
    assert!((e.e_log_phi - e.e_log_1m_phi).abs() < 1e-15);
}

proptest! {
    #[test]
    fn expectation_signs(m in -8.0f64..8.0, v in 0.0f64..10.0) {
        let rule = GaussHermite::<f64>::new(32).unwrap();
        let e = projected_expectations(m, v, &rule);
        prop_assert!(e.e_log_phi < 0.0 && e.e_log_1m_phi < 0.0);
        // log Φ is increasing and concave; log(1 − Φ) is decreasing and concave
        prop_assert!(e.e_d1 > 0.0 && e.e_d1m < 0.0);
        prop_assert!(e.e_d2 < 0.0 && e.e_d2m < 0.0);
    }

    #[test]
    fn reflection_swaps_the_two_tails(m in -6.0f64..6.0, v in 0.0f64..8.0) {
        let rule = GaussHermite::<f64>::new(32).unwrap();
        let a = projected_expectations(m, v, &rule);
        let b = projected_expectations(-m, v, &rule);
        prop_assert!((a.e_log_phi - b.e_log_1m_phi).abs() <= 1e-12 * (1.0 + a.e_log_phi.abs()));
        prop_assert!((a.e_d1 + b.e_d1m).abs() <= 1e-12 * (1.0 + a.e_d1.abs()));
    }
}
