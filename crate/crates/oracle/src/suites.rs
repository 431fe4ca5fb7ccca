//! Engine-versus-oracle comparisons that return the measured discrepancy,
//! so callers pick their own sample sizes and thresholds.

use hmpsbm::linalg::identity;
use hmpsbm::quadrature::GaussHermite;
use hmpsbm::vb::{
    elbo, grad_log_cholesky, grad_sigma, grad_theta, log_cholesky_from_sigma, projected_expectations, update_gamma,
    update_phi0, update_rho, update_sigma2, update_w, update_z, ProbitTable, VariationalState,
};
use hmpsbm::{CovariateMatrix, Hyperparameters, MultiplexNetwork};
use ndarray::{Array1, Array2, Array3, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::{
    brute_force_discrete_posterior, cond_gamma, cond_phi0, cond_rho, cond_sigma2, cond_w, cond_z, finite_diff,
    mc_gauss_expectations, TinyInstance, DEFAULT_STEP,
};

/// A random model input with a random (valid, non-optimal) variational state.
#[derive(Debug, Clone)]
pub struct RandomProblem {
    pub network: MultiplexNetwork,
    pub x: CovariateMatrix<f64>,
    pub hyper: Hyperparameters<f64>,
    pub state: VariationalState<f64>,
}

fn random_simplex(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let g = Gamma::new(0.7, 1.0).unwrap();
    let mut v: Vec<f64> = (0..m).map(|_| g.sample(rng) + 1e-3).collect();
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}

impl RandomProblem {
    pub fn new(seed: u64, n: usize, l: usize, p: usize, m_w: usize, m_z: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let density = rng.random_range(0.15..0.6);
        let mut edges = Vec::new();
        for layer in 0..l {
            for i in 0..n {
                for j in 0..n {
                    if i != j && rng.random::<f64>() < density {
                        edges.push((layer, i, j));
                    }
                }
            }
        }
        let network = MultiplexNetwork::from_edges(l, n, edges).expect("valid random edges");
        let values = Array2::from_shape_fn((n, p), |_| rng.sample::<f64, _>(StandardNormal));
        let x = CovariateMatrix::new(values, false).expect("finite covariates");

        let pos = Gamma::new(2.0, 1.0).unwrap();
        let mut hyper = Hyperparameters::default_for(p);
        hyper.alpha0 = 0.5 + pos.sample(&mut rng);
        hyper.beta0 = 0.5 + pos.sample(&mut rng);
        hyper.eta0 = 0.5 + pos.sample(&mut rng);
        hyper.nu0 = 1.0 + pos.sample(&mut rng);
        hyper.omega0 = 0.5 + pos.sample(&mut rng);
        hyper.mu = (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();

        let mut phi_w = Array2::zeros((n, m_w));
        for mut row in phi_w.rows_mut() {
            row.assign(&Array1::from(random_simplex(&mut rng, m_w)));
        }
        let mut phi_z = Array3::zeros((l, n, m_z));
        for layer in 0..l {
            for i in 0..n {
                let v = random_simplex(&mut rng, m_z);
                phi_z.slice_mut(ndarray::s![layer, i, ..]).assign(&Array1::from(v));
            }
        }
        let beta_param = |rng: &mut ChaCha8Rng, shape| Array2::from_shape_fn(shape, |_| 0.3 + 4.0 * rng.random::<f64>());
        let rho_a = beta_param(&mut rng, (m_z, m_z));
        let rho_b = beta_param(&mut rng, (m_z, m_z));
        let gamma_a = beta_param(&mut rng, (m_w, m_z));
        let gamma_b = beta_param(&mut rng, (m_w, m_z));
        let theta_phi = Array2::from_shape_fn((m_w, p), |_| rng.sample::<f64, _>(StandardNormal));
        let chol_b = Array3::from_shape_fn((m_w, p, p), |(_, r, c)| {
            if r == c {
                rng.random_range(-0.8..0.3)
            } else if r > c {
                0.4 * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            }
        });
        let theta_phi0 = Array2::from_shape_fn((m_w, p), |_| rng.sample::<f64, _>(StandardNormal));
        let mut sigma_phi0 = Array3::zeros((m_w, p, p));
        for k in 0..m_w {
            let a = Array2::from_shape_fn((p, p), |_| 0.5 * rng.sample::<f64, _>(StandardNormal));
            let s = a.dot(&a.t()) + identity::<f64>(p) * 0.2;
            sigma_phi0.index_axis_mut(Axis(0), k).assign(&s);
        }
        let nu = Array1::from_shape_fn(m_w, |_| 1.0 + 3.0 * rng.random::<f64>());
        let omega = Array1::from_shape_fn(m_w, |_| 0.5 + 2.0 * rng.random::<f64>());
        let state = VariationalState {
            phi_w,
            phi_z,
            rho_a,
            rho_b,
            gamma_a,
            gamma_b,
            theta_phi,
            chol_b,
            theta_phi0,
            sigma_phi0,
            nu,
            omega,
        };
        state.validate(n, l, p).expect("random state is valid");
        Self { network, x, hyper, state }
    }

    /// Sizes drawn from `N ≤ 10`, `L ≤ 3`, `P ≤ 3`, truncations ≤ 3.
    pub fn small(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
        let n = rng.random_range(2..=10);
        let l = rng.random_range(1..=3);
        let p = rng.random_range(1..=3);
        let m_w = rng.random_range(1..=3);
        let m_z = rng.random_range(1..=3);
        Self::new(seed, n, l, p, m_w, m_z)
    }

    pub fn elbo(&self, rule: &GaussHermite<f64>) -> f64 {
        elbo(&self.state, &self.network, &self.x, &self.hyper, rule)
    }
}

/// `|a − b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Below this magnitude gradient entries are compared on an absolute scale.
pub const GRADIENT_FLOOR: f64 = 1e-3;

/// Largest relative error of each analytic gradient against central
/// differences of the ELBO.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GradientErrors {
    pub theta: f64,
    pub sigma: f64,
    pub log_cholesky: f64,
}

impl GradientErrors {
    pub fn max(&self) -> f64 {
        self.theta.max(self.sigma).max(self.log_cholesky)
    }

    fn merge(&mut self, other: GradientErrors) {
        self.theta = self.theta.max(other.theta);
        self.sigma = self.sigma.max(other.sigma);
        self.log_cholesky = self.log_cholesky.max(other.log_cholesky);
    }
}

/// Checks every probit block of `problem` against finite differences.
pub fn gradient_errors(problem: &RandomProblem, rule: &GaussHermite<f64>) -> GradientErrors {
    let mut out = GradientErrors::default();
    let p = problem.x.num_features();
    for k in 0..problem.state.theta_phi.nrows() {
        let mut errs = GradientErrors::default();

        let analytic = grad_theta(k, &problem.state, &problem.x, rule);
        let point = problem.state.theta_phi.row(k).to_vec();
        let mut work = problem.clone();
        let fd = finite_diff(
            |v| {
                work.state.theta_phi.row_mut(k).assign(&Array1::from(v.to_vec()));
                work.elbo(rule)
            },
            &point,
            DEFAULT_STEP,
        );
        for (a, f) in analytic.iter().zip(&fd) {
            errs.theta = errs.theta.max(relative_error(*a, *f, GRADIENT_FLOOR));
        }

        // lower-triangular entries of B_k
        let analytic = grad_log_cholesky(k, &problem.state, &problem.x, rule);
        let slots: Vec<(usize, usize)> = (0..p).flat_map(|r| (0..=r).map(move |c| (r, c))).collect();
        let point: Vec<f64> = slots.iter().map(|&(r, c)| problem.state.chol_b[[k, r, c]]).collect();
        let mut work = problem.clone();
        let fd = finite_diff(
            |v| {
                for (&(r, c), &val) in slots.iter().zip(v) {
                    work.state.chol_b[[k, r, c]] = val;
                }
                work.elbo(rule)
            },
            &point,
            DEFAULT_STEP,
        );
        for (&(r, c), f) in slots.iter().zip(&fd) {
            errs.log_cholesky = errs.log_cholesky.max(relative_error(analytic[[r, c]], *f, GRADIENT_FLOOR));
        }

        // Σ_k through its symmetric entries: moving Σ_rc and Σ_cr together
        // picks up G_rc + G_cr
        let analytic = grad_sigma(k, &problem.state, &problem.x, rule);
        let sigma = problem.state.sigma_phi(k);
        let point: Vec<f64> = slots.iter().map(|&(r, c)| sigma[[r, c]]).collect();
        let mut work = problem.clone();
        let fd = finite_diff(
            |v| {
                let mut s = Array2::zeros((p, p));
                for (&(r, c), &val) in slots.iter().zip(v) {
                    s[[r, c]] = val;
                    s[[c, r]] = val;
                }
                let b = log_cholesky_from_sigma(s.view()).expect("perturbed covariance stays positive definite");
                work.state.chol_b.index_axis_mut(Axis(0), k).assign(&b);
                work.elbo(rule)
            },
            &point,
            DEFAULT_STEP,
        );
        for (&(r, c), f) in slots.iter().zip(&fd) {
            let a = if r == c { analytic[[r, r]] } else { analytic[[r, c]] + analytic[[c, r]] };
            errs.sigma = errs.sigma.max(relative_error(a, *f, GRADIENT_FLOOR));
        }
        out.merge(errs);
    }
    out
}

/// Runs [`gradient_errors`] over `count` random small problems.
pub fn gradient_suite(count: usize, seed: u64) -> GradientErrors {
    let rule = GaussHermite::new(32).unwrap();
    let mut out = GradientErrors::default();
    for r in 0..count {
        out.merge(gradient_errors(&RandomProblem::small(seed.wrapping_add(r as u64)), &rule));
    }
    out
}

/// ELBO change caused by each closed-form update, applied in sweep order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepChanges {
    pub rho: f64,
    pub gamma: f64,
    pub phi0: f64,
    pub sigma2: f64,
    pub z: f64,
    pub w: f64,
}

impl StepChanges {
    /// The most negative change, or zero if none decreased.
    pub fn worst(&self) -> f64 {
        [self.rho, self.gamma, self.phi0, self.sigma2, self.z, self.w].into_iter().fold(0.0, f64::min)
    }
}

/// Applies every closed-form update once to `problem`, recording the ELBO
/// change of each.
pub fn closed_form_changes(problem: &mut RandomProblem, rule: &GaussHermite<f64>) -> StepChanges {
    let mut last = problem.elbo(rule);
    let mut delta = |p: &RandomProblem| {
        let now = p.elbo(rule);
        let d = now - last;
        last = now;
        d
    };
    let (a, b) = update_rho(&problem.state, &problem.network, &problem.hyper);
    problem.state.rho_a = a;
    problem.state.rho_b = b;
    let rho = delta(problem);
    let (a, b) = update_gamma(&problem.state, &problem.hyper);
    problem.state.gamma_a = a;
    problem.state.gamma_b = b;
    let gamma = delta(problem);
    let (t, s) = update_phi0(&problem.state, &problem.hyper);
    problem.state.theta_phi0 = t;
    problem.state.sigma_phi0 = s;
    let phi0 = delta(problem);
    let (nu, omega) = update_sigma2(&problem.state, &problem.hyper);
    problem.state.nu = nu;
    problem.state.omega = omega;
    let sigma2 = delta(problem);
    problem.state.phi_z = update_z(&problem.state, &problem.network);
    let z = delta(problem);
    let table = ProbitTable::new(&problem.state, &problem.x, rule);
    problem.state.phi_w = update_w(&problem.state, &table);
    let w = delta(problem);
    StepChanges { rho, gamma, phi0, sigma2, z, w }
}

/// Most negative single-step ELBO change over `count` random starts, each
/// taken through `sweeps` rounds of closed-form updates.
pub fn monotonicity_suite(count: usize, sweeps: usize, seed: u64) -> f64 {
    let rule = GaussHermite::new(32).unwrap();
    let mut worst = 0.0f64;
    for r in 0..count {
        let mut problem = RandomProblem::small(seed.wrapping_add(r as u64));
        for _ in 0..sweeps {
            worst = worst.min(closed_form_changes(&mut problem, &rule).worst());
        }
    }
    worst
}

/// Worst discrepancies between the conditionals and their references.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ConditionalErrors {
    /// `cond_z`/`cond_w` against exhaustive enumeration.
    pub discrete: f64,
    /// Engine updates on a point-mass state against `cond_rho`,
    /// `cond_gamma`, `cond_phi0` and `cond_sigma2`.
    pub closed_form: f64,
}

/// A variational state that puts all its mass on the instance's values.
/// The weight variances are matched in `E[1/σ²]` only, and the centre
/// covariance is zero, so the state is deliberately degenerate.
pub fn point_mass_state(inst: &TinyInstance) -> VariationalState<f64> {
    let (n, l, p) = (inst.num_nodes(), inst.num_layers(), inst.x.num_features());
    let (m_w, m_z) = (inst.m_w, inst.m_z);
    let phi_w = Array2::from_shape_fn((n, m_w), |(i, k)| if inst.w[i] == k { 1.0 } else { 0.0 });
    let phi_z = Array3::from_shape_fn((l, n, m_z), |(layer, i, s)| if inst.z[[layer, i]] == s { 1.0 } else { 0.0 });
    // exp(2·(−40)) is far below every tolerance in use
    let chol_b = Array3::from_shape_fn((m_w, p, p), |(_, r, c)| if r == c { -40.0 } else { 0.0 });
    VariationalState {
        phi_w,
        phi_z,
        rho_a: Array2::ones((m_z, m_z)),
        rho_b: Array2::ones((m_z, m_z)),
        gamma_a: Array2::ones((m_w, m_z)),
        gamma_b: Array2::ones((m_w, m_z)),
        theta_phi: inst.phi.clone(),
        chol_b,
        theta_phi0: inst.phi0.clone(),
        sigma_phi0: Array3::zeros((m_w, p, p)),
        nu: Array1::ones(m_w),
        omega: Array1::from(inst.sigma2.clone()),
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn conditional_errors(inst: &TinyInstance) -> ConditionalErrors {
    let mut out = ConditionalErrors::default();
    let posterior = brute_force_discrete_posterior(inst);
    for i in 0..inst.num_nodes() {
        for layer in 0..inst.num_layers() {
            let d = max_abs_diff(&cond_z(inst, layer, i), &posterior.conditional_z(inst, layer, i));
            out.discrete = out.discrete.max(d);
        }
        out.discrete = out.discrete.max(max_abs_diff(&cond_w(inst, i), &posterior.conditional_w(inst, i)));
    }

    let state = point_mass_state(inst);
    let mut bump = |a: f64, b: f64| out.closed_form = out.closed_form.max((a - b).abs());
    let (ra, rb) = update_rho(&state, &inst.network, &inst.hyper);
    for k in 0..inst.m_z {
        for m in 0..inst.m_z {
            let (a, b) = cond_rho(inst, k, m);
            bump(ra[[k, m]], a);
            bump(rb[[k, m]], b);
        }
    }
    let (ga, gb) = update_gamma(&state, &inst.hyper);
    for k in 0..inst.m_w {
        for s in 0..inst.m_z {
            let (a, b) = cond_gamma(inst, k, s);
            bump(ga[[k, s]], a);
            bump(gb[[k, s]], b);
        }
    }
    let (t0, s0) = update_phi0(&state, &inst.hyper);
    for k in 0..inst.m_w {
        let (mean, cov) = cond_phi0(inst, k);
        for (a, b) in t0.row(k).iter().zip(&mean) {
            bump(*a, *b);
        }
        for (a, b) in s0.index_axis(Axis(0), k).iter().zip(&cov) {
            bump(*a, *b);
        }
    }
    let (nu, omega) = update_sigma2(&state, &inst.hyper);
    for k in 0..inst.m_w {
        let (a, b) = cond_sigma2(inst, k);
        bump(nu[k], a);
        bump(omega[k], b);
    }
    out
}

/// Random tiny instance whose configuration count stays enumerable.
pub fn random_tiny(seed: u64) -> TinyInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7111);
    loop {
        let n: usize = rng.random_range(2..=4);
        let l: usize = rng.random_range(1..=2);
        let m_w: usize = rng.random_range(1..=3);
        let m_z: usize = rng.random_range(1..=3);
        let p = rng.random_range(1..=3);
        let count = (m_w * m_z.pow(l as u32)).pow(n as u32);
        if count <= 200_000 {
            return TinyInstance::random(seed, n, l, p, m_w, m_z);
        }
    }
}

pub fn conditional_suite(count: usize, seed: u64) -> ConditionalErrors {
    let mut out = ConditionalErrors::default();
    for r in 0..count {
        let e = conditional_errors(&random_tiny(seed.wrapping_add(r as u64)));
        out.discrete = out.discrete.max(e.discrete);
        out.closed_form = out.closed_form.max(e.closed_form);
    }
    out
}

/// Quadrature against Monte Carlo over random `(m, v)` pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QuadratureCheck {
    pub comparisons: usize,
    /// Comparisons further than the allowed number of standard errors.
    pub violations: usize,
    /// Largest `|quadrature − mean| / se`.
    pub worst_z: f64,
}

/// Compares all six projected expectations for `pairs` draws of
/// `m ∈ [−5, 5]`, `v ∈ (0, 10]`.
pub fn quadrature_suite(pairs: usize, samples: usize, allowed_se: f64, seed: u64) -> QuadratureCheck {
    let rule = GaussHermite::new(32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = QuadratureCheck::default();
    for r in 0..pairs {
        let m = rng.random_range(-5.0..=5.0);
        let v = 10.0 * (1.0 - rng.random::<f64>());
        let q = projected_expectations(m, v, &rule);
        let factor = Array2::from_elem((1, 1), v.sqrt());
        let mc = mc_gauss_expectations(&[1.0], &[m], &factor, samples, seed.wrapping_add(1 + r as u64));
        for (value, est) in [
            (q.e_log_phi, mc.e_log_phi),
            (q.e_log_1m_phi, mc.e_log_1m_phi),
            (q.e_d1, mc.e_d1),
            (q.e_d1m, mc.e_d1m),
            (q.e_d2, mc.e_d2),
            (q.e_d2m, mc.e_d2m),
        ] {
            let z = (value - est.mean).abs() / est.se;
            out.comparisons += 1;
            out.worst_z = out.worst_z.max(z);
            if z > allowed_se {
                out.violations += 1;
            }
        }
    }
    out
}
