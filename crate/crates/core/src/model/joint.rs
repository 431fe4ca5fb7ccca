use ndarray::Array2;

use super::{CovariateMatrix, Hyperparameters, MultiplexNetwork};
use crate::error::{ensure, Result};
use crate::scalar::Real;
use crate::special::{ln_beta, log_norm_cdf, xlogy};

/// Point values for every latent quantity at truncation `(M_w, M_z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterBundle<T> {
    /// Global group per node.
    pub w: Vec<usize>,
    /// Layer group per `(layer, node)`.
    pub z: Array2<usize>,
    /// `M_z × M_z` block connection probabilities.
    pub rho: Array2<T>,
    /// `M_w × M_z` stick breaks γ′.
    pub gamma_breaks: Array2<T>,
    /// `M_w × P` probit weights.
    pub phi: Array2<T>,
    /// `M_w × P` centres of the probit weights.
    pub phi0: Array2<T>,
    pub sigma2: Vec<T>,
}

impl<T: Real> ParameterBundle<T> {
    fn check(&self, net: &MultiplexNetwork, x: &CovariateMatrix<T>, hyper: &Hyperparameters<T>) -> Result<()> {
        let (m_w, m_z) = self.gamma_breaks.dim();
        let p = x.num_features();
        ensure!(self.w.len() == net.num_nodes(), Shape, "w length does not match the network");
        ensure!(
            self.z.dim() == (net.num_layers(), net.num_nodes()),
            Shape,
            "z must be L × N"
        );
        ensure!(self.rho.dim() == (m_z, m_z), Shape, "rho must be M_z × M_z");
        ensure!(self.phi.dim() == (m_w, p) && self.phi0.dim() == (m_w, p), Shape, "phi and phi0 must be M_w × P");
        ensure!(self.sigma2.len() == m_w, Shape, "sigma2 must have M_w entries");
        ensure!(self.w.iter().all(|&k| k < m_w), Invalid, "global label exceeds M_w");
        ensure!(self.z.iter().all(|&s| s < m_z), Invalid, "layer label exceeds M_z");
        x.check_nodes(net.num_nodes())?;
        hyper.validate(p)
    }
}

/// Bernoulli log-likelihood of the network given layer labels and ρ.
pub fn log_likelihood<T: Real>(z: &Array2<usize>, rho: &Array2<T>, net: &MultiplexNetwork) -> T {
    let n = net.num_nodes();
    let mut total = T::zero();
    for l in 0..net.num_layers() {
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let p = rho[[z[[l, i]], z[[l, j]]]];
                total += if net.has_edge(l, i, j) { xlogy(T::one(), p) } else { xlogy(T::one(), T::one() - p) };
            }
        }
    }
    total
}

fn log_beta_pdf<T: Real>(v: T, a: T, b: T) -> T {
    xlogy(a - T::one(), v) + xlogy(b - T::one(), T::one() - v) - ln_beta(a, b)
}

fn log_gauss_iso<T: Real>(v: ndarray::ArrayView1<'_, T>, mean: ndarray::ArrayView1<'_, T>, var: T) -> T {
    let p = T::from_usize(v.len()).unwrap();
    let sq: T = v.iter().zip(mean).map(|(&a, &b)| (a - b) * (a - b)).sum();
    -T::lit(0.5) * p * (T::TAU() * var).ln() - T::lit(0.5) * sq / var
}

/// Log joint density of network, labels and parameters, with every prior
/// normalized and the stick products truncated at `(M_w, M_z)`.
///
/// A zero probability paired with a positive count yields `-∞`.
pub fn log_joint<T: Real>(
    bundle: &ParameterBundle<T>,
    net: &MultiplexNetwork,
    x: &CovariateMatrix<T>,
    hyper: &Hyperparameters<T>,
) -> Result<T> {
    bundle.check(net, x, hyper)?;
    let mut total = log_likelihood(&bundle.z, &bundle.rho, net);

    // layer labels given global labels, via the γ′ sticks
    for l in 0..net.num_layers() {
        for (i, &k) in bundle.w.iter().enumerate() {
            let s = bundle.z[[l, i]];
            total += xlogy(T::one(), bundle.gamma_breaks[[k, s]]);
            for r in 0..s {
                total += xlogy(T::one(), T::one() - bundle.gamma_breaks[[k, r]]);
            }
        }
    }

    // global labels via probit sticks
    for (i, &k) in bundle.w.iter().enumerate() {
        let xi = x.row(i);
        total += log_norm_cdf(xi.dot(&bundle.phi.row(k)));
        for r in 0..k {
            total += log_norm_cdf(-xi.dot(&bundle.phi.row(r)));
        }
    }

    for &p in bundle.rho.iter() {
        total += log_beta_pdf(p, hyper.alpha0, hyper.beta0);
    }
    for &g in bundle.gamma_breaks.iter() {
        total += log_beta_pdf(g, T::one(), hyper.eta0);
    }

    let mu = ndarray::ArrayView1::from(&hyper.mu[..]);
    for k in 0..bundle.phi.nrows() {
        let s2 = bundle.sigma2[k];
        total += log_gauss_iso(bundle.phi.row(k), bundle.phi0.row(k), s2);
        total += log_gauss_iso(bundle.phi0.row(k), mu, T::one());
        // inverse-gamma(ν₀, ω₀)
        total = total + hyper.nu0 * hyper.omega0.ln() - hyper.nu0.ln_gamma() - (hyper.nu0 + T::one()) * s2.ln()
            - hyper.omega0 / s2;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    fn single_edge_bundle(rho: f64) -> ParameterBundle<f64> {
        ParameterBundle {
            w: vec![0, 0],
            z: array![[0, 0]],
            rho: array![[rho]],
            gamma_breaks: array![[0.5]],
            phi: array![[0.0]],
            phi0: array![[0.0]],
            sigma2: vec![1.0],
        }
    }

    #[test]
    fn single_edge_likelihood() {
        let net = MultiplexNetwork::from_edges(1, 2, [(0, 0, 1)]).unwrap();
        let b = single_edge_bundle(0.5);
        // one edge and one non-edge, both at probability one half
        assert_relative_eq!(log_likelihood(&b.z, &b.rho, &net), 2.0 * 0.5f64.ln(), epsilon = 1e-15);
        let net1 = MultiplexNetwork::from_edges(1, 2, [(0, 0, 1), (0, 1, 0)]).unwrap();
        let b0 = single_edge_bundle(0.0);
        assert_eq!(log_likelihood(&b0.z, &b0.rho, &net1), f64::NEG_INFINITY);
        let x = CovariateMatrix::intercept_only(2);
        let h = Hyperparameters::default_for(1);
        assert_eq!(log_joint(&b0, &net1, &x, &h).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn likelihood_scales_with_replicated_layers() {
        let one = MultiplexNetwork::from_edges(1, 3, [(0, 0, 1), (0, 2, 0)]).unwrap();
        let two = one.select_layers(&[0, 0]).unwrap();
        let rho = array![[0.3, 0.6], [0.2, 0.9]];
        let z1 = array![[0, 1, 1]];
        let z2 = array![[0, 1, 1], [0, 1, 1]];
        assert_relative_eq!(
            2.0 * log_likelihood(&z1, &rho, &one),
            log_likelihood(&z2, &rho, &two),
            epsilon = 1e-12
        );
    }
}
