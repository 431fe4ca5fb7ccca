use hmpsbm::embed::{initial_state, InitConfig};
use hmpsbm::model::{sample_network, split_labels, TruthSpec};
use hmpsbm::quadrature::GaussHermite;
use hmpsbm::vb::{fit, FitConfig};
use hmpsbm::{CovariateMatrix, Hyperparameters, TruncationConfig};
use hmpsbm_oracle::suites::{closed_form_changes, RandomProblem};
use ndarray::array;
use proptest::prelude::*;

#[test]
fn closed_form_updates_never_lower_the_elbo() {
    let rule = GaussHermite::new(32).unwrap();
    for seed in 0..10 {
        let mut problem = RandomProblem::small(seed);
        for sweep in 0..3 {
            let c = closed_form_changes(&mut problem, &rule);
            assert!(c.worst() > -1e-6, "seed {seed} sweep {sweep}: {c:?}");
        }
    }
}

#[test]
fn full_sweeps_increase_the_elbo() {
    let w = split_labels(60, &[1, 1]).unwrap();
    let spec = TruthSpec::Explicit {
        w,
        gamma: array![[0.9, 0.1], [0.1, 0.9]],
        rho: array![[0.5, 0.05], [0.05, 0.4]],
    };
    let (net, _) = sample_network(60, 2, &spec, 5).unwrap();
    let x = CovariateMatrix::<f64>::intercept_only(60);
    let hyper = Hyperparameters::default_for(1);
    let trunc = TruncationConfig::new(3, 3).unwrap();
    let (init, _) = initial_state(&net, &x, &hyper, trunc, &InitConfig::default()).unwrap();
    let mut config = FitConfig::new(trunc);
    config.max_iterations = 15;
    let (_, report) = fit(&net, &x, &hyper, &config, init).unwrap();
    for pair in report.elbo_trace.windows(2) {
        assert!(pair[1] >= pair[0] - 1e-6, "ELBO fell from {} to {}", pair[0], pair[1]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn each_closed_form_step_is_an_ascent(seed in 100u64..1_000_000) {
        let rule = GaussHermite::new(32).unwrap();
        let mut problem = RandomProblem::small(seed);
        let c = closed_form_changes(&mut problem, &rule);
        prop_assert!(c.worst() > -1e-6, "{:?}", c);
    }
}
