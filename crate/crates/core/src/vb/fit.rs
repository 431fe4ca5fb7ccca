use std::time::Instant;

use ndarray::{Array1, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::elbo::elbo;
use super::expect::ProbitTable;
use super::grad::PhiBlock;
use super::logchol::grad_b;
use super::updates::{update_gamma, update_phi0, update_rho, update_sigma2, update_w, update_z};
use super::{FitConfig, VariationalState};
use crate::error::{ensure, Result};
use crate::model::{CovariateMatrix, Hyperparameters, MultiplexNetwork};
use crate::quadrature::GaussHermite;
use crate::scalar::Real;

/// Adam moments of one probit block, plus the snapshot taken at the last
/// accepted step. Each sweep resumes from the snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiOptimizer<T> {
    pub theta: AdamState<T>,
    pub chol: AdamState<T>,
    saved_theta: AdamState<T>,
    saved_chol: AdamState<T>,
}

impl<T: Real> PhiOptimizer<T> {
    pub fn new(p: usize, config: &FitConfig) -> Self {
        let a = &config.adam;
        let theta = AdamState::new(p, a.learning_rate_theta, a.beta1, a.beta2, a.epsilon);
        let chol = AdamState::new(p * p, a.learning_rate_sigma, a.beta1, a.beta2, a.epsilon);
        Self { saved_theta: theta.clone(), saved_chol: chol.clone(), theta, chol }
    }
}

/// What one block optimization did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PhiOutcome {
    pub theta_steps: usize,
    pub sigma_steps: usize,
    pub nonfinite_gradient: bool,
}

/// Gradient ascent on `(θ̃_k, B_k)` as in the CAVI-with-Adam loop: first the
/// mean, then the covariance factor, each for at most `max_steps` Adam
/// steps, stopping once more than `max_decreases` steps failed to improve
/// on the best value seen. The best point found is kept, so the ELBO never
/// decreases.
pub fn optimize_phi_k<T: Real>(
    k: usize,
    state: &mut VariationalState<T>,
    x: &CovariateMatrix<T>,
    config: &FitConfig,
    optimizer: &mut PhiOptimizer<T>,
    rule: &GaussHermite<T>,
) -> PhiOutcome {
    let (theta, b) = {
        let block = PhiBlock::new(k, state, x);
        optimize_block(&block, state.theta_phi.row(k).to_owned(), state.chol_b.index_axis(Axis(0), k).to_owned(), config, optimizer, rule)
    };
    state.theta_phi.row_mut(k).assign(&theta.0);
    state.chol_b.index_axis_mut(Axis(0), k).assign(&b.0);
    PhiOutcome { theta_steps: theta.1, sigma_steps: b.1, nonfinite_gradient: theta.2 || b.2 }
}

type StageResult<A> = (A, usize, bool);

fn optimize_block<T: Real>(
    block: &PhiBlock<'_, T>,
    theta: Array1<T>,
    b: ndarray::Array2<T>,
    config: &FitConfig,
    opt: &mut PhiOptimizer<T>,
    rule: &GaussHermite<T>,
) -> (StageResult<Array1<T>>, StageResult<ndarray::Array2<T>>) {
    let p = theta.len();
    opt.theta = opt.saved_theta.clone();
    opt.chol = opt.saved_chol.clone();

    // mean
    let start = block.evaluate(theta.view(), b.view(), rule);
    let mut best = start.value;
    let mut best_theta = theta.clone();
    let mut current = theta;
    let mut grad = start.grad_theta.to_vec();
    let mut decreases = 0;
    let mut steps = 0;
    let mut nonfinite_theta = !grad.iter().all(|g| g.is_finite());
    while !nonfinite_theta && steps < config.max_steps {
        adam_step(current.as_slice_mut().unwrap(), &grad, &mut opt.theta);
        steps += 1;
        let e = block.evaluate(current.view(), b.view(), rule);
        if !e.value.is_finite() || !e.grad_theta.iter().all(|g| g.is_finite()) {
            nonfinite_theta = true;
            break;
        }
        if e.value > best {
            best = e.value;
            best_theta.assign(&current);
            opt.saved_theta = opt.theta.clone();
        } else {
            decreases += 1;
            if decreases > config.max_decreases {
                break;
            }
        }
        grad = e.grad_theta.to_vec();
    }
    let theta_steps = steps;

    // covariance factor, with the mean fixed at its best value
    let start = block.evaluate(best_theta.view(), b.view(), rule);
    let mut best = start.value;
    let mut best_b = b.clone();
    let mut current = b;
    let mut grad = lower_flat(&grad_b(start.grad_sigma.view(), current.view()));
    let mut decreases = 0;
    let mut steps = 0;
    let mut nonfinite_b = !grad.iter().all(|g| g.is_finite());
    while !nonfinite_b && steps < config.max_steps {
        adam_step(current.as_slice_mut().unwrap(), &grad, &mut opt.chol);
        steps += 1;
        let e = block.evaluate(best_theta.view(), current.view(), rule);
        let g = lower_flat(&grad_b(e.grad_sigma.view(), current.view()));
        if !e.value.is_finite() || !g.iter().all(|v| v.is_finite()) {
            nonfinite_b = true;
            break;
        }
        if e.value > best {
            best = e.value;
            best_b.assign(&current);
            opt.saved_chol = opt.chol.clone();
        } else {
            decreases += 1;
            if decreases > config.max_decreases {
                break;
            }
        }
        grad = g;
    }
    debug_assert_eq!(best_b.len(), p * p);
    ((best_theta, theta_steps, nonfinite_theta), (best_b, steps, nonfinite_b))
}

/// Row-major copy of a lower-triangular gradient (upper part is zero).
fn lower_flat<T: Real>(g: &ndarray::Array2<T>) -> Vec<T> {
    g.iter().copied().collect()
}

/// Convergence record of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// ELBO of the initial state followed by the value after each sweep.
    pub elbo_trace: Vec<f64>,
    /// Wall-clock seconds per sweep.
    pub sweep_seconds: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub nonfinite_gradient: bool,
    /// Groups that are the most responsible group of at least one node.
    pub occupied_global: usize,
    pub occupied_layer: usize,
}

/// Runs coordinate ascent sweeps from `init`. Each sweep updates ρ, γ, φ⁰,
/// every probit block, σ², z and w in that order, and the loop stops once
/// the relative ELBO change drops below `config.tolerance` or after
/// `config.max_iterations` sweeps.
pub fn fit<T: Real>(
    net: &MultiplexNetwork,
    x: &CovariateMatrix<T>,
    hyper: &Hyperparameters<T>,
    config: &FitConfig,
    init: VariationalState<T>,
) -> Result<(VariationalState<T>, FitReport)> {
    config.validate()?;
    x.check_nodes(net.num_nodes())?;
    hyper.validate(x.num_features())?;
    init.validate(net.num_nodes(), net.num_layers(), x.num_features())?;
    ensure!(
        init.truncation() == config.truncation,
        Shape,
        "initial state has truncation {:?} but the config asks for {:?}",
        init.truncation(),
        config.truncation
    );
    let rule = GaussHermite::new(config.quadrature_nodes)?;
    let p = x.num_features();
    let m_w = config.truncation.m_w;
    let mut optimizers: Vec<PhiOptimizer<T>> = (0..m_w).map(|_| PhiOptimizer::new(p, config)).collect();

    let mut state = init;
    let mut previous = elbo(&state, net, x, hyper, &rule);
    let mut trace = vec![previous.as_f64()];
    let mut seconds = Vec::new();
    let mut converged = false;
    let mut nonfinite = false;
    for _ in 0..config.max_iterations {
        let started = Instant::now();
        let (a, b) = update_rho(&state, net, hyper);
        state.rho_a = a;
        state.rho_b = b;
        let (a, b) = update_gamma(&state, hyper);
        state.gamma_a = a;
        state.gamma_b = b;
        let (t0, s0) = update_phi0(&state, hyper);
        state.theta_phi0 = t0;
        state.sigma_phi0 = s0;

        let updated: Vec<_> = {
            let snapshot = &state;
            optimizers
                .par_iter_mut()
                .enumerate()
                .map(|(k, opt)| {
                    let block = PhiBlock::new(k, snapshot, x);
                    let theta = snapshot.theta_phi.row(k).to_owned();
                    let b = snapshot.chol_b.index_axis(Axis(0), k).to_owned();
                    optimize_block(&block, theta, b, config, opt, &rule)
                })
                .collect()
        };
        for (k, (theta, b)) in updated.into_iter().enumerate() {
            state.theta_phi.row_mut(k).assign(&theta.0);
            state.chol_b.index_axis_mut(Axis(0), k).assign(&b.0);
            nonfinite |= theta.2 || b.2;
        }

        let (nu, omega) = update_sigma2(&state, hyper);
        state.nu = nu;
        state.omega = omega;
        state.phi_z = update_z(&state, net);
        let table = ProbitTable::new(&state, x, &rule);
        state.phi_w = update_w(&state, &table);

        let current = elbo(&state, net, x, hyper, &rule);
        trace.push(current.as_f64());
        seconds.push(started.elapsed().as_secs_f64());
        let change = ((current - previous) / previous.abs().max(T::min_positive_value())).abs();
        previous = current;
        if change < T::lit(config.tolerance) {
            converged = true;
            break;
        }
    }

    let result = crate::eval::extract_assignments(&state);
    let report = FitReport {
        iterations: seconds.len(),
        elbo_trace: trace,
        sweep_seconds: seconds,
        converged,
        nonfinite_gradient: nonfinite,
        occupied_global: result.occupied_global,
        occupied_layer: result.occupied_layer,
    };
    Ok((state, report))
}
