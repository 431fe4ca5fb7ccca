use ndarray::{Array1, Array2, Array3, Axis};
use serde::{Deserialize, Serialize};

use super::{align_labels, assign_outliers, density_cluster, spectral_embed, ClusterMethod};
use crate::error::{ensure, Result};
use crate::linalg::identity;
use crate::model::{CovariateMatrix, Hyperparameters, MultiplexNetwork, TruncationConfig};
use crate::scalar::Real;
use crate::vb::VariationalState;

/// Empirical proportions are clamped to this distance from 0 and 1 before
/// being turned into beta parameters.
const PROPORTION_CLAMP: f64 = 1e-6;

/// How the global-group responsibilities start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GlobalStart {
    /// Clustered from the aggregated adjacency matrix.
    #[default]
    Informed,
    /// Every responsibility equal to `1 / M_w`.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitConfig {
    /// Mass moved off the assigned group when softening hard labels.
    pub epsilon: f64,
    /// Starting minimum cluster size of the density clusterer.
    pub min_cluster_size: usize,
    pub method: ClusterMethod,
    pub global_start: GlobalStart,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self { epsilon: 0.05, min_cluster_size: 5, method: ClusterMethod::Hdbscan, global_start: GlobalStart::Informed }
    }
}

impl InitConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!((0.0..1.0).contains(&self.epsilon), Domain, "epsilon must lie in [0, 1)");
        ensure!(self.min_cluster_size >= 1, Domain, "min_cluster_size must be positive");
        Ok(())
    }
}

/// Hard labels in `0..m` turned into rows with `1 − ε` on the label and
/// `ε / (m − 1)` elsewhere; with `m = 1` all mass sits on group 0.
pub fn soften(hard: &[usize], m: usize, epsilon: f64) -> Array2<f64> {
    if m == 1 {
        return Array2::ones((hard.len(), 1));
    }
    let off = epsilon / (m - 1) as f64;
    Array2::from_shape_fn((hard.len(), m), |(i, k)| if hard[i] == k { 1.0 - epsilon } else { off })
}

/// Hard labels in `0..=cap−1` for one adjacency matrix.
fn cluster_matrix(adjacency: &Array2<f64>, cap: usize, config: &InitConfig) -> Result<(Vec<usize>, Option<String>)> {
    let n = adjacency.nrows();
    if cap == 1 {
        return Ok((vec![0; n], None));
    }
    let embedding = spectral_embed(adjacency, cap.min(n))?;
    let clusters = density_cluster(&embedding.coordinates, cap, config.min_cluster_size, config.method)?;
    let labels = assign_outliers(&embedding.coordinates, &clusters)?;
    Ok((labels, clusters.warning))
}

/// Initial layer-group labels for every layer, aligned to layer 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerInit {
    /// `L × N`.
    pub hard: Array2<usize>,
    /// `L × N × M_z`.
    pub soft: Array3<f64>,
    pub warnings: Vec<String>,
}

pub fn init_layer_groups(net: &MultiplexNetwork, m_z: usize, config: &InitConfig) -> Result<LayerInit> {
    ensure!(m_z >= 1, Domain, "m_z must be positive");
    config.validate()?;
    let (l, n) = (net.num_layers(), net.num_nodes());
    let mut hard = Array2::zeros((l, n));
    let mut warnings = Vec::new();
    let mut reference: Vec<usize> = Vec::new();
    for layer in 0..l {
        let (labels, warning) = cluster_matrix(&net.layer_matrix(layer), m_z, config)?;
        warnings.extend(warning.map(|w| format!("layer {layer}: {w}")));
        let labels = if layer == 0 {
            reference = labels.clone();
            labels
        } else {
            let perm = align_labels(&reference, &labels, m_z)?;
            labels.iter().map(|&c| perm[c]).collect()
        };
        hard.row_mut(layer).assign(&Array1::from(labels));
    }
    let mut soft = Array3::zeros((l, n, m_z));
    for layer in 0..l {
        let s = soften(hard.row(layer).as_slice().unwrap(), m_z, config.epsilon);
        soft.index_axis_mut(Axis(0), layer).assign(&s);
    }
    Ok(LayerInit { hard, soft, warnings })
}

/// Initial global-group labels from the summed adjacency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalInit {
    pub hard: Vec<usize>,
    /// `N × M_w`.
    pub soft: Array2<f64>,
    pub warning: Option<String>,
}

pub fn init_global_groups(net: &MultiplexNetwork, m_w: usize, config: &InitConfig) -> Result<GlobalInit> {
    ensure!(m_w >= 1, Domain, "m_w must be positive");
    config.validate()?;
    let (hard, warning) = cluster_matrix(&net.aggregated_matrix(), m_w, config)?;
    let soft = soften(&hard, m_w, config.epsilon);
    Ok(GlobalInit { hard, soft, warning })
}

fn clamp_odds(p: f64) -> f64 {
    let p = p.clamp(PROPORTION_CLAMP, 1.0 - PROPORTION_CLAMP);
    p / (1.0 - p)
}

/// Beta parameters whose means equal the empirical block densities, with
/// `β̃ = 1`. Blocks without any ordered pair fall back to the prior.
pub fn init_rho(net: &MultiplexNetwork, hard_z: &Array2<usize>, m_z: usize, alpha0: f64, beta0: f64) -> Result<(Array2<f64>, Array2<f64>)> {
    ensure!(hard_z.dim() == (net.num_layers(), net.num_nodes()), Shape, "hard labels must be L × N");
    ensure!(hard_z.iter().all(|&s| s < m_z), Invalid, "layer label exceeds m_z");
    let mut edges = Array2::<f64>::zeros((m_z, m_z));
    let mut pairs = Array2::<f64>::zeros((m_z, m_z));
    for l in 0..net.num_layers() {
        let mut sizes = vec![0.0; m_z];
        for &s in hard_z.row(l) {
            sizes[s] += 1.0;
        }
        for k in 0..m_z {
            for m in 0..m_z {
                pairs[[k, m]] += sizes[k] * sizes[m] - if k == m { sizes[k] } else { 0.0 };
            }
        }
        for i in 0..net.num_nodes() {
            for &j in net.out_neighbors(l, i) {
                edges[[hard_z[[l, i]], hard_z[[l, j as usize]]]] += 1.0;
            }
        }
    }
    let mut a = Array2::zeros((m_z, m_z));
    let mut b = Array2::ones((m_z, m_z));
    for ((k, m), &p) in pairs.indexed_iter() {
        if p > 0.0 {
            a[[k, m]] = clamp_odds(edges[[k, m]] / p);
        } else {
            a[[k, m]] = alpha0;
            b[[k, m]] = beta0;
        }
    }
    Ok((a, b))
}

/// Beta parameters whose means equal the proportion of `(layer, node)`
/// pairs with `w = k` that have `z = s`, with `β̃ = 1`. Unused global
/// groups get the prior `(1, η₀)`.
pub fn init_gamma(hard_w: &[usize], hard_z: &Array2<usize>, m_w: usize, m_z: usize, eta0: f64) -> Result<(Array2<f64>, Array2<f64>)> {
    ensure!(hard_z.ncols() == hard_w.len(), Shape, "w and z label counts differ");
    ensure!(hard_w.iter().all(|&k| k < m_w), Invalid, "global label exceeds m_w");
    ensure!(hard_z.iter().all(|&s| s < m_z), Invalid, "layer label exceeds m_z");
    let mut counts = Array2::<f64>::zeros((m_w, m_z));
    for row in hard_z.rows() {
        for (i, &s) in row.iter().enumerate() {
            counts[[hard_w[i], s]] += 1.0;
        }
    }
    let mut a = Array2::zeros((m_w, m_z));
    let mut b = Array2::ones((m_w, m_z));
    for k in 0..m_w {
        let total: f64 = counts.row(k).sum();
        for s in 0..m_z {
            if total > 0.0 {
                a[[k, s]] = clamp_odds(counts[[k, s]] / total);
            } else {
                a[[k, s]] = 1.0;
                b[[k, s]] = eta0;
            }
        }
    }
    Ok((a, b))
}

/// What the informed initialization decided.
#[derive(Debug, Clone, PartialEq)]
pub struct InitReport {
    pub global_labels: Vec<usize>,
    pub layer_labels: Array2<usize>,
    pub warnings: Vec<String>,
}

/// Complete starting state: clustered responsibilities, moment-matched ρ
/// and γ, probit weights at the prior mean with identity covariance.
pub fn initial_state<T: Real>(
    net: &MultiplexNetwork,
    x: &CovariateMatrix<T>,
    hyper: &Hyperparameters<T>,
    truncation: TruncationConfig,
    config: &InitConfig,
) -> Result<(VariationalState<T>, InitReport)> {
    let TruncationConfig { m_w, m_z } = TruncationConfig::new(truncation.m_w, truncation.m_z)?;
    x.check_nodes(net.num_nodes())?;
    hyper.validate(x.num_features())?;
    let layers = init_layer_groups(net, m_z, config)?;
    let mut warnings = layers.warnings.clone();
    let (hard_w, soft_w) = match config.global_start {
        GlobalStart::Informed => {
            let g = init_global_groups(net, m_w, config)?;
            warnings.extend(g.warning.map(|w| format!("global: {w}")));
            (g.hard, g.soft)
        }
        GlobalStart::Uniform => (vec![0; net.num_nodes()], Array2::from_elem((net.num_nodes(), m_w), 1.0 / m_w as f64)),
    };
    let (rho_a, rho_b) = init_rho(net, &layers.hard, m_z, hyper.alpha0.as_f64(), hyper.beta0.as_f64())?;
    let (gamma_a, gamma_b) = init_gamma(&hard_w, &layers.hard, m_w, m_z, hyper.eta0.as_f64())?;

    let p = x.num_features();
    let cast2 = |a: &Array2<f64>| a.mapv(T::lit);
    let mu = Array1::from(hyper.mu.clone());
    let theta = Array2::from_shape_fn((m_w, p), |(_, c)| mu[c]);
    let half_p = T::lit(0.5) * T::from_usize(p).unwrap();
    let mut sigma0 = Array3::zeros((m_w, p, p));
    for k in 0..m_w {
        sigma0.index_axis_mut(Axis(0), k).assign(&identity::<T>(p));
    }
    let state = VariationalState {
        phi_w: cast2(&soft_w),
        phi_z: layers.soft.mapv(T::lit),
        rho_a: cast2(&rho_a),
        rho_b: cast2(&rho_b),
        gamma_a: cast2(&gamma_a),
        gamma_b: cast2(&gamma_b),
        theta_phi: theta.clone(),
        chol_b: Array3::zeros((m_w, p, p)),
        theta_phi0: theta,
        sigma_phi0: sigma0,
        nu: Array1::from_elem(m_w, hyper.nu0 + half_p),
        // ω₀ + ½ tr Σ̃ + ½ tr Σ̃⁰ with both covariances at the identity
        omega: Array1::from_elem(m_w, hyper.omega0 + T::from_usize(p).unwrap()),
    };
    let report = InitReport { global_labels: hard_w, layer_labels: layers.hard, warnings };
    Ok((state, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn soften_rows() {
        let s = soften(&[0, 2], 3, 0.05);
        assert_relative_eq!(s[[0, 0]], 0.95);
        assert_relative_eq!(s[[0, 1]], 0.025);
        assert_relative_eq!(s[[1, 2]], 0.95);
        assert_eq!(soften(&[0, 0], 1, 0.05), Array2::ones((2, 1)));
    }

    #[test]
    fn rho_inversion() {
        // two nodes in one group, one edge out of two ordered pairs
        let net = MultiplexNetwork::from_edges(1, 2, [(0, 0, 1)]).unwrap();
        let (a, b) = init_rho(&net, &ndarray::array![[0, 0]], 2, 1.0, 1.0).unwrap();
        assert_relative_eq!(a[[0, 0]], 1.0, epsilon = 1e-12);
        assert_eq!(b[[0, 0]], 1.0);
        assert_eq!((a[[1, 1]], b[[1, 1]]), (1.0, 1.0));
        let full = MultiplexNetwork::from_edges(1, 2, [(0, 0, 1), (0, 1, 0)]).unwrap();
        let (a, _) = init_rho(&full, &ndarray::array![[0, 0]], 1, 1.0, 1.0).unwrap();
        assert_relative_eq!(a[[0, 0]], (1.0 - 1e-6) / 1e-6, max_relative = 1e-9);
    }

    #[test]
    fn gamma_inversion() {
        let (a, b) = init_gamma(&[0, 0, 0], &ndarray::array![[0, 1, 2], [2, 1, 0]], 2, 3, 0.7).unwrap();
        for s in 0..3 {
            assert_relative_eq!(a[[0, s]], 0.5, epsilon = 1e-12);
            assert_eq!(b[[0, s]], 1.0);
            assert_eq!((a[[1, s]], b[[1, s]]), (1.0, 0.7));
        }
    }
}
