//! Closed-form coordinate updates.

use ndarray::{Array1, Array2, Array3, ArrayView2, Axis};
use rayon::prelude::*;

use super::expect::ProbitTable;
use super::VariationalState;
use crate::linalg::{identity, squared_distance, trace};
use crate::model::{Hyperparameters, MultiplexNetwork};
use crate::scalar::Real;
use crate::special::{digamma, softmax_in_place};

/// `E[log γ_ks] = E log γ′_ks + Σ_{r<s} E log(1 − γ′_kr)`, `M_w × M_z`.
pub fn expected_log_gamma<T: Real>(state: &VariationalState<T>) -> Array2<T> {
    let (m_w, m_z) = state.gamma_a.dim();
    let mut out = Array2::zeros((m_w, m_z));
    for k in 0..m_w {
        let mut tail = T::zero();
        for s in 0..m_z {
            let (a, b) = (state.gamma_a[[k, s]], state.gamma_b[[k, s]]);
            let ab = digamma(a + b);
            out[[k, s]] = digamma(a) - ab + tail;
            tail = tail + digamma(b) - ab;
        }
    }
    out
}

/// `(E log ρ, E log(1 − ρ))`, each `M_z × M_z`.
pub fn expected_log_rho<T: Real>(state: &VariationalState<T>) -> (Array2<T>, Array2<T>) {
    let ab = ndarray::Zip::from(&state.rho_a).and(&state.rho_b).map_collect(|&a, &b| digamma(a + b));
    let e1 = ndarray::Zip::from(&state.rho_a).and(&ab).map_collect(|&a, &s| digamma(a) - s);
    let e0 = ndarray::Zip::from(&state.rho_b).and(&ab).map_collect(|&b, &s| digamma(b) - s);
    (e1, e0)
}

/// Expected edge mass and total ordered-pair mass between layer groups in
/// one layer: `Σ_{i≠j} A_ij φ_ik φ_jm` and `Σ_{i≠j} φ_ik φ_jm`.
pub(crate) fn layer_block_mass<T: Real>(
    phi: ArrayView2<'_, T>,
    net: &MultiplexNetwork,
    layer: usize,
) -> (Array2<T>, Array2<T>) {
    let (n, m) = phi.dim();
    let mut edges = Array2::zeros((m, m));
    let mut self_pairs = Array2::zeros((m, m));
    let mut totals = Array1::zeros(m);
    for i in 0..n {
        let pi = phi.row(i);
        // Σ_{j ∈ out(i)} φ_j
        let mut out = Array1::zeros(m);
        for &j in net.out_neighbors(layer, i) {
            out += &phi.row(j as usize);
        }
        for k in 0..m {
            for s in 0..m {
                edges[[k, s]] += pi[k] * out[s];
                self_pairs[[k, s]] += pi[k] * pi[s];
            }
        }
        totals += &pi;
    }
    let pairs = Array2::from_shape_fn((m, m), |(k, s)| totals[k] * totals[s] - self_pairs[[k, s]]);
    (edges, pairs)
}

/// Per-layer block masses summed over layers in layer order.
pub(crate) fn block_mass<T: Real>(state: &VariationalState<T>, net: &MultiplexNetwork) -> (Array2<T>, Array2<T>) {
    let per_layer: Vec<_> = (0..net.num_layers())
        .into_par_iter()
        .map(|l| layer_block_mass(state.phi_z.index_axis(Axis(0), l), net, l))
        .collect();
    let m = state.phi_z.dim().2;
    let mut edges = Array2::zeros((m, m));
    let mut pairs = Array2::zeros((m, m));
    for (e, p) in per_layer {
        edges += &e;
        pairs += &p;
    }
    (edges, pairs)
}

/// Beta posterior of the block connection probabilities.
pub fn update_rho<T: Real>(
    state: &VariationalState<T>,
    net: &MultiplexNetwork,
    hyper: &Hyperparameters<T>,
) -> (Array2<T>, Array2<T>) {
    let (edges, pairs) = block_mass(state, net);
    let a = edges.mapv(|e| hyper.alpha0 + e);
    let b = ndarray::Zip::from(&pairs).and(&edges).map_collect(|&p, &e| hyper.beta0 + (p - e).max(T::zero()));
    (a, b)
}

/// `c_ks = Σ_l Σ_i φ_w[i,k] φ_z[l,i,s]`.
pub(crate) fn gamma_counts<T: Real>(state: &VariationalState<T>) -> Array2<T> {
    let (l, n, m_z) = state.phi_z.dim();
    let m_w = state.phi_w.ncols();
    let mut counts = Array2::zeros((m_w, m_z));
    let mut t = Array1::zeros(m_z);
    for i in 0..n {
        t.fill(T::zero());
        for layer in 0..l {
            t += &state.phi_z.slice(ndarray::s![layer, i, ..]);
        }
        for k in 0..m_w {
            let w = state.phi_w[[i, k]];
            for s in 0..m_z {
                counts[[k, s]] += w * t[s];
            }
        }
    }
    counts
}

/// Beta posterior of the layer-group sticks; the tail sum stops at `M_z`.
pub fn update_gamma<T: Real>(state: &VariationalState<T>, hyper: &Hyperparameters<T>) -> (Array2<T>, Array2<T>) {
    let counts = gamma_counts(state);
    let (m_w, m_z) = counts.dim();
    let a = counts.mapv(|c| T::one() + c);
    let mut b = Array2::zeros((m_w, m_z));
    for k in 0..m_w {
        let mut tail = T::zero();
        for s in (0..m_z).rev() {
            b[[k, s]] = hyper.eta0 + tail;
            tail += counts[[k, s]];
        }
    }
    (a, b)
}

/// Gaussian posterior of the weight centres.
pub fn update_phi0<T: Real>(state: &VariationalState<T>, hyper: &Hyperparameters<T>) -> (Array2<T>, Array3<T>) {
    let (m_w, p) = state.theta_phi.dim();
    let mut theta0 = Array2::zeros((m_w, p));
    let mut sigma0 = Array3::zeros((m_w, p, p));
    for k in 0..m_w {
        let (nu, om) = (state.nu[k], state.omega[k]);
        let denom = nu + om;
        for c in 0..p {
            theta0[[k, c]] = (nu * state.theta_phi[[k, c]] + om * hyper.mu[c]) / denom;
        }
        sigma0.index_axis_mut(Axis(0), k).assign(&identity::<T>(p).mapv(|v| v * om / denom));
    }
    (theta0, sigma0)
}

/// Inverse-gamma posterior of the weight variances.
pub fn update_sigma2<T: Real>(state: &VariationalState<T>, hyper: &Hyperparameters<T>) -> (Array1<T>, Array1<T>) {
    let (m_w, p) = state.theta_phi.dim();
    let half = T::lit(0.5);
    let nu = Array1::from_elem(m_w, hyper.nu0 + half * T::from_usize(p).unwrap());
    let omega = Array1::from_shape_fn(m_w, |k| {
        hyper.omega0
            + half * squared_distance(state.theta_phi.row(k), state.theta_phi0.row(k))
            + half * trace(state.sigma_phi(k).view())
            + half * trace(state.sigma_phi0_k(k))
    });
    (nu, omega)
}

/// Global-group responsibilities. Rows are independent given the rest of
/// the state and are computed in parallel.
pub fn update_w<T: Real>(state: &VariationalState<T>, probit: &ProbitTable<T>) -> Array2<T> {
    let e_log_gamma = expected_log_gamma(state);
    let (l, n, m_z) = state.phi_z.dim();
    let m_w = state.phi_w.ncols();
    let rows: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut t = vec![T::zero(); m_z];
            for layer in 0..l {
                for (s, ts) in t.iter_mut().enumerate() {
                    *ts += state.phi_z[[layer, i, s]];
                }
            }
            let tau = probit.expected_log_tau(i);
            let mut row: Vec<T> = (0..m_w)
                .map(|k| (0..m_z).map(|s| t[s] * e_log_gamma[[k, s]]).sum::<T>() + tau[k])
                .collect();
            softmax_in_place(&mut row);
            row
        })
        .collect();
    Array2::from_shape_fn((n, m_w), |(i, k)| rows[i][k])
}

/// Expectations shared by all layer-group row updates.
pub(crate) struct ZContext<T> {
    e_log_gamma: Array2<T>,
    /// `E log ρ − E log(1 − ρ)`.
    e_edge: Array2<T>,
    e_log_1m: Array2<T>,
}

impl<T: Real> ZContext<T> {
    pub(crate) fn new(state: &VariationalState<T>) -> Self {
        let (e1, e0) = expected_log_rho(state);
        Self { e_log_gamma: expected_log_gamma(state), e_edge: &e1 - &e0, e_log_1m: e0 }
    }

    /// Optimal log-responsibilities of `(layer, i)` given every other row,
    /// where `totals` holds `Σ_j φ_z[layer, j, ·]` over all nodes.
    fn log_row(
        &self,
        phi_w: ArrayView2<'_, T>,
        phi: ArrayView2<'_, T>,
        totals: &[T],
        net: &MultiplexNetwork,
        layer: usize,
        i: usize,
    ) -> Vec<T> {
        let m = phi.ncols();
        let mut out_mass = vec![T::zero(); m];
        for &j in net.out_neighbors(layer, i) {
            for (s, o) in out_mass.iter_mut().enumerate() {
                *o += phi[[j as usize, s]];
            }
        }
        let mut in_mass = vec![T::zero(); m];
        for &j in net.in_neighbors(layer, i) {
            for (s, o) in in_mass.iter_mut().enumerate() {
                *o += phi[[j as usize, s]];
            }
        }
        let others: Vec<T> = (0..m).map(|s| totals[s] - phi[[i, s]]).collect();
        (0..m)
            .map(|k| {
                let mut v = T::zero();
                for w in 0..phi_w.ncols() {
                    v += phi_w[[i, w]] * self.e_log_gamma[[w, k]];
                }
                for s in 0..m {
                    v = v + out_mass[s] * self.e_edge[[k, s]] + others[s] * self.e_log_1m[[k, s]];
                    v = v + in_mass[s] * self.e_edge[[s, k]] + others[s] * self.e_log_1m[[s, k]];
                }
                v
            })
            .collect()
    }
}

/// Optimal responsibilities of a single `(layer, i)` row with all other
/// rows held at their current values.
pub fn update_z_node<T: Real>(state: &VariationalState<T>, net: &MultiplexNetwork, layer: usize, i: usize) -> Vec<T> {
    let ctx = ZContext::new(state);
    let phi = state.phi_z.index_axis(Axis(0), layer);
    let totals: Vec<T> = phi.sum_axis(Axis(0)).to_vec();
    let mut row = ctx.log_row(state.phi_w.view(), phi, &totals, net, layer, i);
    softmax_in_place(&mut row);
    row
}

/// Layer-group responsibilities. Within a layer, nodes are visited in
/// index order and each row update sees the rows already refreshed, so
/// every step is an exact coordinate maximization. Layers are independent
/// given `φ_w` and run in parallel.
pub fn update_z<T: Real>(state: &VariationalState<T>, net: &MultiplexNetwork) -> Array3<T> {
    let ctx = ZContext::new(state);
    let mut phi_z = state.phi_z.clone();
    let phi_w = state.phi_w.view();
    phi_z.axis_iter_mut(Axis(0)).into_par_iter().enumerate().for_each(|(layer, mut phi)| {
        let (n, m) = phi.dim();
        let mut totals: Vec<T> = phi.sum_axis(Axis(0)).to_vec();
        for i in 0..n {
            let mut row = ctx.log_row(phi_w, phi.view(), &totals, net, layer, i);
            softmax_in_place(&mut row);
            for s in 0..m {
                totals[s] = totals[s] - phi[[i, s]] + row[s];
                phi[[i, s]] = row[s];
            }
        }
    });
    phi_z
}
