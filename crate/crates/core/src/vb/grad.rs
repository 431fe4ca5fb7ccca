//! The part of the ELBO that depends on one probit weight block `φ_k`, and
//! its gradients.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::expect::gauss_expectations;
use super::logchol::{factor_from_log_cholesky, grad_b};
use super::VariationalState;
use crate::linalg::{inverse_from_factor, log_det_from_factor, squared_distance};
use crate::model::CovariateMatrix;
use crate::quadrature::GaussHermite;
use crate::scalar::Real;

/// Everything outside `(θ̃_k, B_k)` that the `φ_k` objective depends on.
#[derive(Debug, Clone)]
pub struct PhiBlock<'a, T> {
    pub x: &'a CovariateMatrix<T>,
    /// `φ_w[i, k]`.
    pub weights: Vec<T>,
    /// `Σ_{m>k} φ_w[i, m]`.
    pub tails: Vec<T>,
    pub theta0: ArrayView1<'a, T>,
    /// `E[1/σ_k²] = ν̃_k / ω̃_k`.
    pub precision: T,
}

/// Objective value and gradients at one point.
#[derive(Debug, Clone)]
pub struct PhiEval<T> {
    pub value: T,
    pub grad_theta: Array1<T>,
    /// `∂/∂Σ̃` with the entries of `Σ̃` treated as independent.
    pub grad_sigma: Array2<T>,
}

impl<'a, T: Real> PhiBlock<'a, T> {
    pub fn new(k: usize, state: &'a VariationalState<T>, x: &'a CovariateMatrix<T>) -> Self {
        let m_w = state.phi_w.ncols();
        let weights = state.phi_w.column(k).to_vec();
        let tails = state.phi_w.rows().into_iter().map(|r| (k + 1..m_w).map(|m| r[m]).sum()).collect();
        Self {
            x,
            weights,
            tails,
            theta0: state.theta_phi0.row(k),
            precision: state.nu[k] / state.omega[k],
        }
    }

    /// `Σ_i [φ_w,ik E log Φ + tail_ik E log(1−Φ)] − ½ E[1/σ²](‖θ−θ⁰‖² + tr Σ) + ½ log det Σ`,
    /// which differs from the ELBO by a constant in `(θ, B)`.
    pub fn evaluate(&self, theta: ArrayView1<'_, T>, b: ArrayView2<'_, T>, rule: &GaussHermite<T>) -> PhiEval<T> {
        let p = theta.len();
        let half = T::lit(0.5);
        let l = factor_from_log_cholesky(b);
        let sigma = l.dot(&l.t());
        let mut value = T::zero();
        let mut gt = Array1::zeros(p);
        let mut gs = Array2::zeros((p, p));
        for i in 0..self.x.num_rows() {
            let (w, t) = (self.weights[i], self.tails[i]);
            if w == T::zero() && t == T::zero() {
                continue;
            }
            let xi = self.x.row(i);
            let e = gauss_expectations(xi, theta, l.view(), rule);
            value = value + w * e.e_log_phi + t * e.e_log_1m_phi;
            let d1 = w * e.e_d1 + t * e.e_d1m;
            let d2 = half * (w * e.e_d2 + t * e.e_d2m);
            for r in 0..p {
                gt[r] += d1 * xi[r];
                for c in 0..p {
                    gs[[r, c]] += d2 * xi[r] * xi[c];
                }
            }
        }
        let trace: T = sigma.diag().sum();
        value = value - half * self.precision * (squared_distance(theta, self.theta0) + trace)
            + half * log_det_from_factor(l.view());
        for r in 0..p {
            gt[r] -= self.precision * (theta[r] - self.theta0[r]);
        }
        let inv = inverse_from_factor(l.view());
        for r in 0..p {
            gs[[r, r]] -= half * self.precision;
        }
        gs = gs + inv.mapv(|v| half * v);
        PhiEval { value, grad_theta: gt, grad_sigma: gs }
    }
}

/// `∂ELBO/∂θ̃_k`.
pub fn grad_theta<T: Real>(
    k: usize,
    state: &VariationalState<T>,
    x: &CovariateMatrix<T>,
    rule: &GaussHermite<T>,
) -> Array1<T> {
    let b = state.chol_b.index_axis(ndarray::Axis(0), k);
    PhiBlock::new(k, state, x).evaluate(state.theta_phi.row(k), b, rule).grad_theta
}

/// `∂ELBO/∂Σ̃_k`, symmetric.
pub fn grad_sigma<T: Real>(
    k: usize,
    state: &VariationalState<T>,
    x: &CovariateMatrix<T>,
    rule: &GaussHermite<T>,
) -> Array2<T> {
    let b = state.chol_b.index_axis(ndarray::Axis(0), k);
    PhiBlock::new(k, state, x).evaluate(state.theta_phi.row(k), b, rule).grad_sigma
}

/// `∂ELBO/∂B_k`, lower-triangular.
pub fn grad_log_cholesky<T: Real>(
    k: usize,
    state: &VariationalState<T>,
    x: &CovariateMatrix<T>,
    rule: &GaussHermite<T>,
) -> Array2<T> {
    let g = grad_sigma(k, state, x, rule);
    grad_b(g.view(), state.chol_b.index_axis(ndarray::Axis(0), k))
}
