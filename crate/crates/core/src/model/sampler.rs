use ndarray::Array2;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{probit_stick_probs, MultiplexNetwork};
use crate::error::{ensure, Error, Result};

const STREAM_GLOBAL: u64 = 1;
const STREAM_LAYER: u64 = 2;
const STREAM_EDGE: u64 = 3;
const STREAM_FEATURE: u64 = 4;

/// Independent generator for `(purpose, a, b)` derived from one base seed.
///
/// ChaCha's 64-bit stream id is split as `purpose:16 | a:24 | b:24`, so draws
/// for one layer or node never depend on how many draws other streams made.
pub fn stream_rng(seed: u64, purpose: u64, a: usize, b: usize) -> ChaCha8Rng {
    debug_assert!(a < 1 << 24 && b < 1 << 24);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose << 48 | (a as u64) << 24 | b as u64);
    rng
}

/// How the latent structure of a synthetic network is specified.
#[derive(Debug, Clone)]
pub enum TruthSpec {
    /// Global groups given; `gamma` rows are distributions over layer groups.
    Explicit { w: Vec<usize>, gamma: Array2<f64>, rho: Array2<f64> },
    /// Global groups drawn from probit stick-breaking weights of the covariates.
    CovariateDriven { x: Array2<f64>, phi: Array2<f64>, gamma: Array2<f64>, rho: Array2<f64> },
}

/// Latent variables behind a sampled network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub global_groups: Vec<usize>,
    /// `L × N`.
    pub layer_groups: Array2<usize>,
    pub connection_probs: Array2<f64>,
    pub gamma_rows: Array2<f64>,
    pub probit_weights: Option<Array2<f64>>,
}

fn check_gamma_rho(gamma: &Array2<f64>, rho: &Array2<f64>) -> Result<()> {
    ensure!(rho.is_square() && rho.nrows() > 0, Shape, "rho must be a non-empty square matrix");
    ensure!(
        rho.iter().all(|&p| (0.0..=1.0).contains(&p)),
        Domain,
        "connection probabilities must lie in [0, 1]"
    );
    ensure!(
        gamma.ncols() == rho.nrows(),
        Shape,
        "gamma has {} columns but rho is {}×{}",
        gamma.ncols(),
        rho.nrows(),
        rho.nrows()
    );
    for (k, row) in gamma.rows().into_iter().enumerate() {
        let total: f64 = row.sum();
        ensure!(
            row.iter().all(|&g| g >= 0.0 && g.is_finite()) && (total - 1.0).abs() <= 1e-9,
            Domain,
            "gamma row {k} is not a probability vector"
        );
    }
    Ok(())
}

/// Draws a multiplex network and its latent labels. Fully determined by `seed`.
pub fn sample_network(
    n: usize,
    l: usize,
    spec: &TruthSpec,
    seed: u64,
) -> Result<(MultiplexNetwork, GroundTruth)> {
    ensure!(n > 0 && l > 0, Domain, "need at least one node and one layer");
    ensure!(n < 1 << 24 && l < 1 << 24, Domain, "network too large for the seeding scheme");
    let (w, gamma, rho, phi) = match spec {
        TruthSpec::Explicit { w, gamma, rho } => {
            check_gamma_rho(gamma, rho)?;
            ensure!(w.len() == n, Shape, "w has length {} but n = {n}", w.len());
            ensure!(w.iter().all(|&k| k < gamma.nrows()), Invalid, "global label exceeds the rows of gamma");
            (w.clone(), gamma, rho, None)
        }
        TruthSpec::CovariateDriven { x, phi, gamma, rho } => {
            check_gamma_rho(gamma, rho)?;
            ensure!(x.nrows() == n, Shape, "covariates have {} rows but n = {n}", x.nrows());
            ensure!(phi.nrows() == gamma.nrows(), Shape, "phi and gamma disagree on the number of global groups");
            let w = (0..n)
                .map(|i| {
                    let tau = probit_stick_probs(x.row(i), phi)?.absorbed();
                    let dist = WeightedIndex::new(&tau).map_err(|e| Error::Domain(e.to_string()))?;
                    Ok(dist.sample(&mut stream_rng(seed, STREAM_GLOBAL, 0, i)))
                })
                .collect::<Result<Vec<_>>>()?;
            (w, gamma, rho, Some(phi.clone()))
        }
    };

    let rows: Vec<WeightedIndex<f64>> = gamma
        .rows()
        .into_iter()
        .map(|r| WeightedIndex::new(r.iter().copied()).map_err(|e| Error::Domain(e.to_string())))
        .collect::<Result<_>>()?;
    let mut z = Array2::zeros((l, n));
    for layer in 0..l {
        for i in 0..n {
            z[[layer, i]] = rows[w[i]].sample(&mut stream_rng(seed, STREAM_LAYER, layer, i));
        }
    }

    let edges: Vec<(usize, usize, usize)> = (0..l)
        .into_par_iter()
        .flat_map_iter(|layer| {
            let z = &z;
            (0..n).flat_map(move |i| {
                let mut rng = stream_rng(seed, STREAM_EDGE, layer, i);
                let zi = z[[layer, i]];
                (0..n)
                    .filter(move |&j| j != i)
                    .filter(move |&j| rand::Rng::random::<f64>(&mut rng) < rho[[zi, z[[layer, j]]]])
                    .map(move |j| (layer, i, j))
                    .collect::<Vec<_>>()
            })
        })
        .collect();
    let net = MultiplexNetwork::from_edges(l, n, edges)?;
    let truth = GroundTruth {
        global_groups: w,
        layer_groups: z,
        connection_probs: rho.clone(),
        gamma_rows: gamma.clone(),
        probit_weights: phi,
    };
    Ok((net, truth))
}

/// Contiguous group labels with sizes proportional to `ratio`; rounding
/// remainder goes to the last group.
pub fn split_labels(n: usize, ratio: &[usize]) -> Result<Vec<usize>> {
    let total: usize = ratio.iter().sum();
    ensure!(total > 0, Domain, "ratio must have a positive entry");
    let mut counts: Vec<usize> = ratio.iter().map(|&r| n * r / total).collect();
    let assigned: usize = counts.iter().sum();
    *counts.last_mut().unwrap() += n - assigned;
    Ok(counts.iter().enumerate().flat_map(|(k, &c)| std::iter::repeat_n(k, c)).collect())
}

/// Features `x_i ~ N(means[w_i], I)`, one independent stream per node.
pub fn group_features(w: &[usize], means: &[Vec<f64>], seed: u64) -> Result<Array2<f64>> {
    ensure!(!means.is_empty(), Domain, "no group means given");
    let d = means[0].len();
    ensure!(means.iter().all(|m| m.len() == d), Shape, "group means differ in length");
    ensure!(w.iter().all(|&k| k < means.len()), Invalid, "group label without a mean");
    let mut x = Array2::zeros((w.len(), d));
    for (i, &k) in w.iter().enumerate() {
        let mut rng = stream_rng(seed, STREAM_FEATURE, 0, i);
        for c in 0..d {
            let e: f64 = StandardNormal.sample(&mut rng);
            x[[i, c]] = means[k][c] + e;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn full_density_gives_complete_graph() {
        let spec = TruthSpec::Explicit { w: vec![0, 0], gamma: array![[1.0]], rho: array![[1.0]] };
        let (net, truth) = sample_network(2, 1, &spec, 3).unwrap();
        assert!(net.has_edge(0, 0, 1) && net.has_edge(0, 1, 0));
        assert_eq!(truth.layer_groups, array![[0, 0]]);
    }

    #[test]
    fn rejects_bad_gamma() {
        let spec = TruthSpec::Explicit { w: vec![0, 0], gamma: array![[0.5, 0.4]], rho: array![[0.1, 0.1], [0.1, 0.1]] };
        assert!(sample_network(2, 1, &spec, 0).is_err());
        let spec = TruthSpec::Explicit { w: vec![0, 0], gamma: array![[1.0]], rho: array![[1.5]] };
        assert!(sample_network(2, 1, &spec, 0).is_err());
    }

    #[test]
    fn split_follows_ratio() {
        let w = split_labels(250, &[3, 2]).unwrap();
        assert_eq!(w.iter().filter(|&&k| k == 0).count(), 150);
        let w = split_labels(7, &[1, 1]).unwrap();
        assert_eq!(w, vec![0, 0, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn streams_are_independent_of_order() {
        use rand::Rng;
        let a: u64 = stream_rng(9, 1, 2, 3).random();
        let mut other = stream_rng(9, 1, 2, 4);
        let _: u64 = other.random();
        assert_eq!(a, stream_rng(9, 1, 2, 3).random::<u64>());
        assert_ne!(a, other.random::<u64>());
    }
}
