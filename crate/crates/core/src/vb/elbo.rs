use ndarray::Axis;
use serde::{Deserialize, Serialize};

use super::expect::ProbitTable;
use super::updates::{block_mass, expected_log_gamma, expected_log_rho, gamma_counts};
use super::VariationalState;
use crate::linalg::{cholesky, log_det_from_factor, squared_distance, trace};
use crate::model::{CovariateMatrix, Hyperparameters, MultiplexNetwork};
use crate::quadrature::GaussHermite;
use crate::scalar::Real;
use crate::special::{digamma, ln_beta, xlogx};

/// `KL(Beta(a, b) ‖ Beta(a0, b0))`.
pub fn kl_beta<T: Real>(a: T, b: T, a0: T, b0: T) -> T {
    ln_beta(a0, b0) - ln_beta(a, b)
        + (a - a0) * digamma(a)
        + (b - b0) * digamma(b)
        + (a0 - a + b0 - b) * digamma(a + b)
}

/// The ELBO split by factor.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ElboTerms<T> {
    /// `E log p(A | z, ρ)`.
    pub likelihood: T,
    /// `E log p(z | w, γ′)`.
    pub layer_groups: T,
    /// `E log p(w | φ)`.
    pub global_groups: T,
    /// `−KL` of the block probabilities.
    pub rho: T,
    /// `−KL` of the stick breaks.
    pub gamma: T,
    /// Probit weights, their centres and variances: expected log priors plus entropies.
    pub probit: T,
    /// Entropies of the categorical factors.
    pub entropy: T,
}

impl<T: Real> ElboTerms<T> {
    pub fn total(&self) -> T {
        self.likelihood + self.layer_groups + self.global_groups + self.rho + self.gamma + self.probit + self.entropy
    }
}

/// Term-by-term evidence lower bound.
pub fn elbo_terms<T: Real>(
    state: &VariationalState<T>,
    net: &MultiplexNetwork,
    x: &CovariateMatrix<T>,
    hyper: &Hyperparameters<T>,
    rule: &GaussHermite<T>,
) -> ElboTerms<T> {
    let half = T::lit(0.5);
    let ln_2pi = T::TAU().ln();

    let (edges, pairs) = block_mass(state, net);
    let (e1, e0) = expected_log_rho(state);
    let mut likelihood = T::zero();
    for ((&e, &p), (&l1, &l0)) in edges.iter().zip(&pairs).zip(e1.iter().zip(&e0)) {
        likelihood = likelihood + e * l1 + (p - e).max(T::zero()) * l0;
    }

    let counts = gamma_counts(state);
    let layer_groups = counts.iter().zip(&expected_log_gamma(state)).map(|(&c, &g)| c * g).sum::<T>();

    let probit = ProbitTable::new(state, x, rule);
    let mut global_groups = T::zero();
    for i in 0..state.num_nodes() {
        for (k, t) in probit.expected_log_tau(i).into_iter().enumerate() {
            let w = state.phi_w[[i, k]];
            if w > T::zero() {
                global_groups += w * t;
            }
        }
    }

    let rho = -state
        .rho_a
        .iter()
        .zip(&state.rho_b)
        .map(|(&a, &b)| kl_beta(a, b, hyper.alpha0, hyper.beta0))
        .sum::<T>();
    let gamma = -state
        .gamma_a
        .iter()
        .zip(&state.gamma_b)
        .map(|(&a, &b)| kl_beta(a, b, T::one(), hyper.eta0))
        .sum::<T>();

    let p = T::from_usize(state.num_features()).unwrap();
    let mu = ndarray::ArrayView1::from(&hyper.mu[..]);
    let mut probit_terms = T::zero();
    for k in 0..state.theta_phi.nrows() {
        let (nu, om) = (state.nu[k], state.omega[k]);
        let e_log_s2 = om.ln() - digamma(nu);
        let e_inv_s2 = nu / om;
        let l = state.chol_factor(k);
        let sigma = l.dot(&l.t());
        let s0 = state.sigma_phi0_k(k);
        let l0 = cholesky(s0).expect("sigma_phi0 is validated as SPD");
        let tr0 = trace(s0);
        let spread = squared_distance(state.theta_phi.row(k), state.theta_phi0.row(k)) + trace(sigma.view()) + tr0;
        // E log N(φ | φ⁰, σ² I)
        probit_terms = probit_terms - half * p * ln_2pi - half * p * e_log_s2 - half * e_inv_s2 * spread;
        // E log N(φ⁰ | μ, I)
        probit_terms = probit_terms - half * p * ln_2pi - half * (squared_distance(state.theta_phi0.row(k), mu) + tr0);
        // E log IG(σ² | ν₀, ω₀)
        probit_terms = probit_terms + hyper.nu0 * hyper.omega0.ln()
            - hyper.nu0.ln_gamma()
            - (hyper.nu0 + T::one()) * e_log_s2
            - hyper.omega0 * e_inv_s2;
        // entropies of q(φ), q(φ⁰), q(σ²)
        let gauss_h = half * p * (T::one() + ln_2pi);
        probit_terms = probit_terms + gauss_h + half * log_det_from_factor(l.view());
        probit_terms = probit_terms + gauss_h + half * log_det_from_factor(l0.view());
        probit_terms = probit_terms + nu + om.ln() + nu.ln_gamma() - (T::one() + nu) * digamma(nu);
    }

    let mut entropy = -state.phi_w.iter().map(|&v| xlogx(v)).sum::<T>();
    for layer in state.phi_z.axis_iter(Axis(0)) {
        entropy -= layer.iter().map(|&v| xlogx(v)).sum::<T>();
    }

    ElboTerms { likelihood, layer_groups, global_groups, rho, gamma, probit: probit_terms, entropy }
}

/// Evidence lower bound of `state`.
pub fn elbo<T: Real>(
    state: &VariationalState<T>,
    net: &MultiplexNetwork,
    x: &CovariateMatrix<T>,
    hyper: &Hyperparameters<T>,
    rule: &GaussHermite<T>,
) -> T {
    elbo_terms(state, net, x, hyper, rule).total()
}
