use hmpsbm::quadrature::GaussHermite;
use hmpsbm_oracle::suites::{gradient_errors, RandomProblem};
use proptest::prelude::*;

#[test]
fn gradients_match_finite_differences_on_fixed_problems() {
    let rule = GaussHermite::new(32).unwrap();
    for seed in 0..10 {
        let e = gradient_errors(&RandomProblem::small(seed), &rule);
        assert!(e.max() < 1e-4, "seed {seed}: {e:?}");
    }
}

#[test]
fn gradients_hold_with_several_features_and_components() {
    let rule = GaussHermite::new(32).unwrap();
    let problem = RandomProblem::new(77, 9, 2, 3, 3, 2);
    let e = gradient_errors(&problem, &rule);
    assert!(e.max() < 1e-4, "{e:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gradients_match_finite_differences(seed in 1_000u64..1_000_000) {
        let rule = GaussHermite::new(32).unwrap();
        let e = gradient_errors(&RandomProblem::small(seed), &rule);
        prop_assert!(e.max() < 1e-4, "{:?}", e);
    }
}
