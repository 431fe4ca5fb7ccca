use ndarray::{Array1, Array2, Array3, ArrayView2};
use serde::{Deserialize, Serialize};

use super::logchol::factor_from_log_cholesky;
use crate::error::{ensure, Result};
use crate::model::TruncationConfig;
use crate::scalar::Real;

/// Parameters of the truncated mean-field posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalState<T> {
    /// `N × M_w` global-group responsibilities.
    pub phi_w: Array2<T>,
    /// `L × N × M_z` layer-group responsibilities.
    pub phi_z: Array3<T>,
    /// Beta parameters of the block connection probabilities, `M_z × M_z`.
    pub rho_a: Array2<T>,
    pub rho_b: Array2<T>,
    /// Beta parameters of the layer-group sticks, `M_w × M_z`.
    pub gamma_a: Array2<T>,
    pub gamma_b: Array2<T>,
    /// Means of the probit weights, `M_w × P`.
    pub theta_phi: Array2<T>,
    /// Log-Cholesky factors of the probit weight covariances, `M_w × P × P`.
    pub chol_b: Array3<T>,
    pub theta_phi0: Array2<T>,
    /// Covariances of the weight centres, `M_w × P × P`.
    pub sigma_phi0: Array3<T>,
    /// Inverse-gamma shape and scale of the weight variances.
    pub nu: Array1<T>,
    pub omega: Array1<T>,
}

impl<T: Real> VariationalState<T> {
    pub fn num_nodes(&self) -> usize {
        self.phi_w.nrows()
    }

    pub fn num_layers(&self) -> usize {
        self.phi_z.dim().0
    }

    pub fn num_features(&self) -> usize {
        self.theta_phi.ncols()
    }

    pub fn truncation(&self) -> TruncationConfig {
        TruncationConfig { m_w: self.phi_w.ncols(), m_z: self.phi_z.dim().2 }
    }

    /// Lower factor `L_k` with `Σ̃_k = L_k L_kᵀ`.
    pub fn chol_factor(&self, k: usize) -> Array2<T> {
        factor_from_log_cholesky(self.chol_b.index_axis(ndarray::Axis(0), k))
    }

    pub fn sigma_phi(&self, k: usize) -> Array2<T> {
        let l = self.chol_factor(k);
        l.dot(&l.t())
    }

    pub fn sigma_phi0_k(&self, k: usize) -> ArrayView2<'_, T> {
        self.sigma_phi0.index_axis(ndarray::Axis(0), k)
    }

    /// Checks shapes against `(N, L, P)` and every invariant of the family.
    pub fn validate(&self, n: usize, l: usize, p: usize) -> Result<()> {
        let TruncationConfig { m_w, m_z } = self.truncation();
        ensure!(m_w >= 1 && m_z >= 1, Domain, "empty truncation");
        ensure!(self.phi_w.nrows() == n, Shape, "phi_w has {} rows, expected {n}", self.phi_w.nrows());
        ensure!(self.phi_z.dim() == (l, n, m_z), Shape, "phi_z must be {l} × {n} × {m_z}");
        ensure!(self.rho_a.dim() == (m_z, m_z) && self.rho_b.dim() == (m_z, m_z), Shape, "rho parameters must be M_z × M_z");
        ensure!(
            self.gamma_a.dim() == (m_w, m_z) && self.gamma_b.dim() == (m_w, m_z),
            Shape,
            "gamma parameters must be M_w × M_z"
        );
        ensure!(
            self.theta_phi.dim() == (m_w, p) && self.theta_phi0.dim() == (m_w, p),
            Shape,
            "probit means must be M_w × P"
        );
        ensure!(
            self.chol_b.dim() == (m_w, p, p) && self.sigma_phi0.dim() == (m_w, p, p),
            Shape,
            "covariance stacks must be M_w × P × P"
        );
        ensure!(self.nu.len() == m_w && self.omega.len() == m_w, Shape, "nu and omega must have M_w entries");

        let tol = T::lit(1e-10);
        let rows_ok = |a: &ArrayView2<'_, T>| {
            a.rows().into_iter().all(|r| {
                r.iter().all(|&v| v >= T::zero() && v.is_finite()) && (r.sum() - T::one()).abs() <= tol
            })
        };
        ensure!(rows_ok(&self.phi_w.view()), Invalid, "phi_w rows must be probability vectors");
        for layer in self.phi_z.outer_iter() {
            ensure!(rows_ok(&layer), Invalid, "phi_z rows must be probability vectors");
        }
        let positive = |v: &T| *v > T::zero() && v.is_finite();
        ensure!(
            self.rho_a.iter().chain(&self.rho_b).chain(&self.gamma_a).chain(&self.gamma_b).all(positive),
            Domain,
            "beta parameters must be positive"
        );
        ensure!(self.nu.iter().chain(&self.omega).all(positive), Domain, "inverse-gamma parameters must be positive");
        ensure!(
            self.theta_phi.iter().chain(&self.theta_phi0).chain(&self.chol_b).all(|v| v.is_finite()),
            Domain,
            "probit parameters must be finite"
        );
        for k in 0..m_w {
            crate::linalg::cholesky(self.sigma_phi0_k(k))?;
        }
        Ok(())
    }
}

/// Step sizes and moment decay of the Adam sub-optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    /// Learning rate for the probit weight means.
    pub learning_rate_theta: f64,
    /// Learning rate for the log-Cholesky covariance factors.
    pub learning_rate_sigma: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate_theta: 0.05, learning_rate_sigma: 0.05, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Settings of the coordinate ascent loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub truncation: TruncationConfig,
    /// Maximum number of full sweeps.
    pub max_iterations: usize,
    /// Relative ELBO change below which the fit stops.
    pub tolerance: f64,
    pub adam: AdamConfig,
    /// Maximum gradient steps per parameter block and sweep.
    pub max_steps: usize,
    /// Gradient ascent stops after this many non-improving steps.
    pub max_decreases: usize,
    pub quadrature_nodes: usize,
    /// Sample count for Monte Carlo cross-checks.
    pub mc_samples: usize,
    pub seed: u64,
}

impl FitConfig {
    pub fn new(truncation: TruncationConfig) -> Self {
        Self {
            truncation,
            max_iterations: 100,
            tolerance: 1e-6,
            adam: AdamConfig::default(),
            max_steps: 30,
            max_decreases: 5,
            quadrature_nodes: 32,
            mc_samples: 1_000_000,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        TruncationConfig::new(self.truncation.m_w, self.truncation.m_z)?;
        ensure!(self.max_iterations >= 1, Domain, "max_iterations must be positive");
        ensure!(self.tolerance > 0.0, Domain, "tolerance must be positive");
        ensure!(self.max_steps >= 1, Domain, "max_steps must be positive");
        ensure!(
            (1..=crate::quadrature::MAX_NODES).contains(&self.quadrature_nodes),
            Domain,
            "quadrature_nodes must lie in 1..={}",
            crate::quadrature::MAX_NODES
        );
        ensure!(self.mc_samples >= 1, Domain, "mc_samples must be positive");
        let a = &self.adam;
        ensure!(
            a.learning_rate_theta > 0.0 && a.learning_rate_sigma > 0.0 && a.epsilon > 0.0,
            Domain,
            "Adam step sizes and epsilon must be positive"
        );
        ensure!(
            (0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2),
            Domain,
            "Adam decay rates must lie in [0, 1)"
        );
        Ok(())
    }
}
