//! Slow reference implementations for tests: complete conditionals written
//! out with plain loops, exhaustive posteriors over the discrete labels,
//! Monte Carlo Gaussian expectations and central finite differences.
//!
//! Nothing here shares code with the engine's update routines. The only
//! engine entry points used are data types and `log_joint`, which feeds the
//! exhaustive enumeration.

pub mod suites;

use hmpsbm::model::{log_joint, ParameterBundle};
use hmpsbm::{CovariateMatrix, Hyperparameters, MultiplexNetwork};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};

/// A network small enough to enumerate every label configuration, with
/// fixed point values for the continuous parameters.
#[derive(Debug, Clone)]
pub struct TinyInstance {
    pub network: MultiplexNetwork,
    pub x: CovariateMatrix<f64>,
    pub hyper: Hyperparameters<f64>,
    pub m_w: usize,
    pub m_z: usize,
    /// Current labels; conditionals are taken with respect to these.
    pub w: Vec<usize>,
    pub z: Array2<usize>,
    pub rho: Array2<f64>,
    /// Every break lies strictly inside (0, 1); the leftover stick beyond
    /// `M_z` is never assigned, as in the engine's truncation.
    pub gamma_breaks: Array2<f64>,
    pub phi: Array2<f64>,
    pub phi0: Array2<f64>,
    pub sigma2: Vec<f64>,
}

pub const MAX_CONFIGURATIONS: usize = 1_000_000;

impl TinyInstance {
    /// Random instance with the given sizes. Requires `n ≤ 4`, `l ≤ 2`,
    /// truncations ≤ 3 and at most [`MAX_CONFIGURATIONS`] label configurations.
    pub fn random(seed: u64, n: usize, l: usize, p: usize, m_w: usize, m_z: usize) -> Self {
        assert!((1..=4).contains(&n) && (1..=2).contains(&l), "tiny instances have n ≤ 4 and l ≤ 2");
        assert!((1..=3).contains(&m_w) && (1..=3).contains(&m_z), "tiny instances have truncations ≤ 3");
        assert!(p >= 1);
        let count = (m_w * m_z.pow(l as u32)).pow(n as u32);
        assert!(count <= MAX_CONFIGURATIONS, "{count} configurations is too many");

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for layer in 0..l {
            for i in 0..n {
                for j in 0..n {
                    if i != j && rng.random::<f64>() < 0.45 {
                        edges.push((layer, i, j));
                    }
                }
            }
        }
        let network = MultiplexNetwork::from_edges(l, n, edges).expect("valid random edges");
        let mut values = Array2::zeros((n, p));
        for v in values.iter_mut() {
            *v = rng.sample::<f64, _>(StandardNormal);
        }
        let x = CovariateMatrix::new(values, false).expect("finite covariates");

        let gamma_dist = Gamma::new(2.0, 1.0).unwrap();
        let mut hyper = Hyperparameters::default_for(p);
        hyper.alpha0 = 0.5 + gamma_dist.sample(&mut rng);
        hyper.beta0 = 0.5 + gamma_dist.sample(&mut rng);
        hyper.eta0 = 0.5 + gamma_dist.sample(&mut rng);
        hyper.nu0 = 1.0 + gamma_dist.sample(&mut rng);
        hyper.omega0 = 0.5 + gamma_dist.sample(&mut rng);
        hyper.mu = (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();

        let open = Beta::new(2.0, 2.0).unwrap();
        let rho = Array2::from_shape_fn((m_z, m_z), |_| open.sample(&mut rng));
        let gamma_breaks = Array2::from_shape_fn((m_w, m_z), |_| open.sample(&mut rng));
        let mut draw = |scale: f64| Array2::from_shape_fn((m_w, p), |_| scale * rng.sample::<f64, _>(StandardNormal));
        let phi = draw(0.8);
        let phi0 = draw(0.8);
        let sigma2 = (0..m_w).map(|_| 0.3 + gamma_dist.sample(&mut rng)).collect();
        let w = (0..n).map(|_| rng.random_range(0..m_w)).collect();
        let z = Array2::from_shape_fn((l, n), |_| rng.random_range(0..m_z));
        Self { network, x, hyper, m_w, m_z, w, z, rho, gamma_breaks, phi, phi0, sigma2 }
    }

    pub fn num_nodes(&self) -> usize {
        self.network.num_nodes()
    }

    pub fn num_layers(&self) -> usize {
        self.network.num_layers()
    }

    pub fn num_configurations(&self) -> usize {
        (self.m_w * self.m_z.pow(self.num_layers() as u32)).pow(self.num_nodes() as u32)
    }

    pub fn bundle(&self, w: &[usize], z: &Array2<usize>) -> ParameterBundle<f64> {
        ParameterBundle {
            w: w.to_vec(),
            z: z.clone(),
            rho: self.rho.clone(),
            gamma_breaks: self.gamma_breaks.clone(),
            phi: self.phi.clone(),
            phi0: self.phi0.clone(),
            sigma2: self.sigma2.clone(),
        }
    }
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn ln(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        x.ln()
    }
}

fn normalize_logs(logs: &[f64]) -> Vec<f64> {
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logs.iter().map(|&v| (v - top).exp()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|v| v / total).collect()
}

/// Truncated stick weight `γ′_s Π_{r<s} (1 − γ′_r)` of one row of breaks.
fn stick_weight(breaks: ndarray::ArrayView1<'_, f64>, s: usize) -> f64 {
    (0..s).fold(breaks[s], |acc, r| acc * (1.0 - breaks[r]))
}

/// Conditional of `z_{layer,i}` given every other label and parameter.
pub fn cond_z(inst: &TinyInstance, layer: usize, i: usize) -> Vec<f64> {
    let n = inst.num_nodes();
    let breaks = inst.gamma_breaks.row(inst.w[i]);
    let logs: Vec<f64> = (0..inst.m_z)
        .map(|k| {
            let mut v = ln(stick_weight(breaks, k));
            for j in 0..n {
                if j == i {
                    continue;
                }
                let zj = inst.z[[layer, j]];
                let out = inst.rho[[k, zj]];
                let inc = inst.rho[[zj, k]];
                v += if inst.network.has_edge(layer, i, j) { ln(out) } else { ln(1.0 - out) };
                v += if inst.network.has_edge(layer, j, i) { ln(inc) } else { ln(1.0 - inc) };
            }
            v
        })
        .collect();
    normalize_logs(&logs)
}

/// Conditional of `w_i` given every other label and parameter.
pub fn cond_w(inst: &TinyInstance, i: usize) -> Vec<f64> {
    let xi = inst.x.row(i);
    let logs: Vec<f64> = (0..inst.m_w)
        .map(|k| {
            let mut tau = normal_cdf(xi.dot(&inst.phi.row(k)));
            for r in 0..k {
                tau *= normal_cdf(-xi.dot(&inst.phi.row(r)));
            }
            let mut v = ln(tau);
            for layer in 0..inst.num_layers() {
                v += ln(stick_weight(inst.gamma_breaks.row(k), inst.z[[layer, i]]));
            }
            v
        })
        .collect();
    normalize_logs(&logs)
}

/// Beta conditional of the stick break `γ′_ks`.
pub fn cond_gamma(inst: &TinyInstance, k: usize, s: usize) -> (f64, f64) {
    let mut at = 0usize;
    let mut beyond = 0usize;
    for layer in 0..inst.num_layers() {
        for i in 0..inst.num_nodes() {
            if inst.w[i] != k {
                continue;
            }
            let zi = inst.z[[layer, i]];
            if zi == s {
                at += 1;
            } else if zi > s {
                beyond += 1;
            }
        }
    }
    (1.0 + at as f64, inst.hyper.eta0 + beyond as f64)
}

/// Beta conditional of the block probability `ρ_km`.
pub fn cond_rho(inst: &TinyInstance, k: usize, m: usize) -> (f64, f64) {
    let (mut on, mut off) = (0usize, 0usize);
    for layer in 0..inst.num_layers() {
        for i in 0..inst.num_nodes() {
            for j in 0..inst.num_nodes() {
                if i == j || inst.z[[layer, i]] != k || inst.z[[layer, j]] != m {
                    continue;
                }
                if inst.network.has_edge(layer, i, j) {
                    on += 1;
                } else {
                    off += 1;
                }
            }
        }
    }
    (inst.hyper.alpha0 + on as f64, inst.hyper.beta0 + off as f64)
}

/// Normal conditional of `φ⁰_k`: mean vector and covariance matrix.
pub fn cond_phi0(inst: &TinyInstance, k: usize) -> (Array1<f64>, Array2<f64>) {
    let s2 = inst.sigma2[k];
    let p = inst.phi.ncols();
    let mean = Array1::from_shape_fn(p, |c| (inst.phi[[k, c]] + s2 * inst.hyper.mu[c]) / (s2 + 1.0));
    let cov = Array2::from_shape_fn((p, p), |(r, c)| if r == c { s2 / (s2 + 1.0) } else { 0.0 });
    (mean, cov)
}

/// Inverse-gamma conditional of `σ²_k`: shape and scale.
pub fn cond_sigma2(inst: &TinyInstance, k: usize) -> (f64, f64) {
    let p = inst.phi.ncols();
    let sq: f64 = (0..p).map(|c| (inst.phi[[k, c]] - inst.phi0[[k, c]]).powi(2)).sum();
    (inst.hyper.nu0 + p as f64 / 2.0, inst.hyper.omega0 + sq / 2.0)
}

/// Exact joint p.m.f. over all `(w, z)` configurations with the continuous
/// parameters held at the instance's values.
#[derive(Debug, Clone)]
pub struct DiscretePosterior {
    pub configurations: Vec<(Vec<usize>, Array2<usize>)>,
    pub probabilities: Vec<f64>,
}

impl DiscretePosterior {
    fn conditional<F>(&self, size: usize, matches: F) -> Vec<f64>
    where
        F: Fn(&[usize], &Array2<usize>) -> Option<usize>,
    {
        let mut out = vec![0.0; size];
        for ((w, z), &p) in self.configurations.iter().zip(&self.probabilities) {
            if let Some(v) = matches(w, z) {
                out[v] += p;
            }
        }
        let total: f64 = out.iter().sum();
        assert!(total > 0.0, "the instance's labels have zero posterior mass");
        out.into_iter().map(|v| v / total).collect()
    }

    /// Distribution of `z_{layer,i}` among configurations that agree with
    /// the instance everywhere else.
    pub fn conditional_z(&self, inst: &TinyInstance, layer: usize, i: usize) -> Vec<f64> {
        self.conditional(inst.m_z, |w, z| {
            let same = w == inst.w.as_slice()
                && z.indexed_iter().all(|((l, j), &v)| (l, j) == (layer, i) || v == inst.z[[l, j]]);
            same.then(|| z[[layer, i]])
        })
    }

    /// Distribution of `w_i` among configurations that agree with the
    /// instance everywhere else.
    pub fn conditional_w(&self, inst: &TinyInstance, i: usize) -> Vec<f64> {
        self.conditional(inst.m_w, |w, z| {
            let same = *z == inst.z && w.iter().enumerate().all(|(j, &v)| j == i || v == inst.w[j]);
            same.then(|| w[i])
        })
    }

    /// Marginal of `w_i`.
    pub fn marginal_w(&self, inst: &TinyInstance, i: usize) -> Vec<f64> {
        self.conditional(inst.m_w, |w, _| Some(w[i]))
    }

    /// Marginal of `z_{layer,i}`.
    pub fn marginal_z(&self, inst: &TinyInstance, layer: usize, i: usize) -> Vec<f64> {
        self.conditional(inst.m_z, |_, z| Some(z[[layer, i]]))
    }
}

/// Enumerates every label configuration through `log_joint`.
pub fn brute_force_discrete_posterior(inst: &TinyInstance) -> DiscretePosterior {
    let (n, l) = (inst.num_nodes(), inst.num_layers());
    let total = inst.num_configurations();
    assert!(total <= MAX_CONFIGURATIONS);
    let per_node = inst.m_w * inst.m_z.pow(l as u32);
    let mut configurations = Vec::with_capacity(total);
    let mut logs = Vec::with_capacity(total);
    for code in 0..total {
        let mut rest = code;
        let mut w = vec![0; n];
        let mut z = Array2::zeros((l, n));
        for i in 0..n {
            let mut digit = rest % per_node;
            rest /= per_node;
            w[i] = digit % inst.m_w;
            digit /= inst.m_w;
            for layer in 0..l {
                z[[layer, i]] = digit % inst.m_z;
                digit /= inst.m_z;
            }
        }
        let lj = log_joint(&inst.bundle(&w, &z), &inst.network, &inst.x, &inst.hyper).expect("consistent instance");
        logs.push(lj);
        configurations.push((w, z));
    }
    DiscretePosterior { configurations, probabilities: normalize_logs(&logs) }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

#[derive(Default)]
struct Running {
    sum: f64,
    sum_sq: f64,
}

impl Running {
    fn push(&mut self, v: f64) {
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn finish(&self, n: usize) -> Estimate {
        let nf = n as f64;
        let mean = self.sum / nf;
        let var = ((self.sum_sq / nf - mean * mean) * nf / (nf - 1.0).max(1.0)).max(0.0);
        Estimate { mean, se: (var / nf).sqrt() }
    }
}

/// Monte Carlo counterparts of the quadrature expectations, with
/// `h(s) = log Φ(s)` and `g(s) = log Φ(−s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct McExpectations {
    pub e_log_phi: Estimate,
    pub e_log_1m_phi: Estimate,
    pub e_d1: Estimate,
    pub e_d1m: Estimate,
    pub e_d2: Estimate,
    pub e_d2m: Estimate,
    /// `E[Σ⁻¹(φ − θ) h(xᵀφ)]`, which equals `x E h′(s)` by Stein's identity.
    pub stein_d1: Vec<Estimate>,
    /// `E[Σ⁻¹(φ − θ) g(xᵀφ)]`.
    pub stein_d1m: Vec<Estimate>,
}

/// `(h, h′, h″)` at `s`, straight from the definitions.
fn log_cdf_derivs(s: f64) -> (f64, f64, f64) {
    let c = normal_cdf(s);
    let r = normal_pdf(s) / c;
    (c.ln(), r, -r * (s + r))
}

/// Samples `φ = θ + Lξ` with `ξ ~ N(0, I)` and averages over the projection
/// `s = xᵀφ`. A zero factor gives exact point values with zero error.
pub fn mc_gauss_expectations(
    x: &[f64],
    theta: &[f64],
    sigma_factor: &Array2<f64>,
    n_samples: usize,
    seed: u64,
) -> McExpectations {
    let p = x.len();
    assert!(theta.len() == p && sigma_factor.dim() == (p, p) && n_samples >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m: f64 = x.iter().zip(theta).map(|(a, b)| a * b).sum();
    let sigma = sigma_factor.dot(&sigma_factor.t());
    let precision = invert_spd(&sigma);
    let mut acc: [Running; 6] = Default::default();
    let mut stein_h: Vec<Running> = (0..p).map(|_| Running::default()).collect();
    let mut stein_g: Vec<Running> = (0..p).map(|_| Running::default()).collect();
    let mut xi = vec![0.0; p];
    for _ in 0..n_samples {
        for v in xi.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        // φ − θ = Lξ
        let delta: Vec<f64> = (0..p).map(|r| (0..p).map(|c| sigma_factor[[r, c]] * xi[c]).sum()).collect();
        let s = m + x.iter().zip(&delta).map(|(a, b)| a * b).sum::<f64>();
        let (h, h1, h2) = log_cdf_derivs(s);
        let (g, g1, g2) = log_cdf_derivs(-s);
        acc[0].push(h);
        acc[1].push(g);
        acc[2].push(h1);
        acc[3].push(-g1);
        acc[4].push(h2);
        acc[5].push(g2);
        if let Some(prec) = &precision {
            for r in 0..p {
                let u: f64 = (0..p).map(|c| prec[[r, c]] * delta[c]).sum();
                stein_h[r].push(u * h);
                stein_g[r].push(u * g);
            }
        }
    }
    let [a0, a1, a2, a3, a4, a5] = acc.map(|r| r.finish(n_samples));
    let stein = |v: &[Running]| {
        if precision.is_some() {
            v.iter().map(|r| r.finish(n_samples)).collect()
        } else {
            Vec::new()
        }
    };
    McExpectations {
        e_log_phi: a0,
        e_log_1m_phi: a1,
        e_d1: a2,
        e_d1m: a3,
        e_d2: a4,
        e_d2m: a5,
        stein_d1: stein(&stein_h),
        stein_d1m: stein(&stein_g),
    }
}

/// Gauss–Jordan inverse; `None` when singular.
fn invert_spd(a: &Array2<f64>) -> Option<Array2<f64>> {
    let p = a.nrows();
    let mut m = a.clone();
    let mut inv = Array2::eye(p);
    for c in 0..p {
        let pivot = (c..p).max_by(|&r, &s| m[[r, c]].abs().total_cmp(&m[[s, c]].abs()))?;
        if m[[pivot, c]].abs() < 1e-300 {
            return None;
        }
        for k in 0..p {
            m.swap([c, k], [pivot, k]);
            inv.swap([c, k], [pivot, k]);
        }
        let d = m[[c, c]];
        for k in 0..p {
            m[[c, k]] /= d;
            inv[[c, k]] /= d;
        }
        for r in 0..p {
            if r != c {
                let f = m[[r, c]];
                for k in 0..p {
                    m[[r, k]] -= f * m[[c, k]];
                    inv[[r, k]] -= f * inv[[c, k]];
                }
            }
        }
    }
    Some(inv)
}

/// Central-difference gradient. Coordinate `i` uses the step
/// `step · max(1, |point_i|)`.
pub fn finite_diff<F: FnMut(&[f64]) -> f64>(mut f: F, point: &[f64], step: f64) -> Vec<f64> {
    let mut x = point.to_vec();
    (0..point.len())
        .map(|i| {
            let h = step * point[i].abs().max(1.0);
            x[i] = point[i] + h;
            let up = f(&x);
            x[i] = point[i] - h;
            let down = f(&x);
            x[i] = point[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Default relative step for [`finite_diff`].
pub const DEFAULT_STEP: f64 = 1e-5;
