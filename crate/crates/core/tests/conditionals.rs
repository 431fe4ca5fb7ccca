use hmpsbm::vb::{update_z_node, VariationalState};
use hmpsbm_oracle::suites::{conditional_errors, point_mass_state, random_tiny};
use hmpsbm_oracle::TinyInstance;

#[test]
fn conditionals_match_enumeration_and_closed_forms() {
    for seed in 0..8 {
        let e = conditional_errors(&random_tiny(seed));
        assert!(e.discrete < 1e-10 && e.closed_form < 1e-12, "seed {seed}: {e:?}");
    }
}

#[test]
fn point_mass_state_is_one_hot() {
    let inst = TinyInstance::random(4, 3, 2, 2, 2, 3);
    let state: VariationalState<f64> = point_mass_state(&inst);
    for i in 0..3 {
        assert_eq!(state.phi_w[[i, inst.w[i]]], 1.0);
        assert_eq!(state.phi_w.row(i).sum(), 1.0);
        for layer in 0..2 {
            assert_eq!(state.phi_z[[layer, i, inst.z[[layer, i]]]], 1.0);
        }
    }
    // the centre covariance is exactly zero, which a regular state forbids
    assert!(state.validate(3, 2, 2).is_err());
}

#[test]
fn z_update_sharpens_towards_the_point_conditional() {
    // with ρ and γ′ concentrated at the instance's values the mean-field z
    // update approaches the exact conditional
    let inst = TinyInstance::random(21, 4, 1, 1, 2, 2);
    let mut state = point_mass_state(&inst);
    let scale = 1e7;
    state.rho_a = inst.rho.mapv(|r| scale * r);
    state.rho_b = inst.rho.mapv(|r| scale * (1.0 - r));
    state.gamma_a = inst.gamma_breaks.mapv(|g| scale * g);
    state.gamma_b = inst.gamma_breaks.mapv(|g| scale * (1.0 - g));
    for i in 0..4 {
        let vb = update_z_node(&state, &inst.network, 0, i);
        let exact = hmpsbm_oracle::cond_z(&inst, 0, i);
        for (a, b) in vb.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-5, "node {i}: {vb:?} vs {exact:?}");
        }
    }
}
