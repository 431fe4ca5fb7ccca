//! Truncated mean-field variational inference.

mod adam;
mod elbo;
mod expect;
mod fit;
mod grad;
mod logchol;
mod state;
mod updates;

pub use adam::{adam_step, AdamState};
pub use elbo::{elbo, elbo_terms, kl_beta, ElboTerms};
pub use expect::{
    column_expectations, expected_log_tau, gauss_expectations, projected_expectations, GaussExpectations, ProbitTable,
};
pub use fit::{fit, optimize_phi_k, FitReport, PhiOptimizer, PhiOutcome};
pub use grad::{grad_log_cholesky, grad_sigma, grad_theta, PhiBlock, PhiEval};
pub use logchol::{chol_log_roundtrip, factor_from_log_cholesky, grad_b, log_cholesky_from_sigma};
pub use state::{AdamConfig, FitConfig, VariationalState};
pub use updates::{
    expected_log_gamma, expected_log_rho, update_gamma, update_phi0, update_rho, update_sigma2, update_w, update_z,
    update_z_node,
};
