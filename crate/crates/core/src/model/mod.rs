//! Domain types of the hierarchical multiplex blockmodel, stick-breaking
//! constructions, the generative sampler and the joint log density.

mod joint;
mod network;
mod sampler;
mod stick;

pub use joint::{log_joint, log_likelihood, ParameterBundle};
pub use network::MultiplexNetwork;
pub use sampler::{group_features, sample_network, split_labels, stream_rng, GroundTruth, TruthSpec};
pub use stick::{probit_stick_probs, stick_breaking_weights, StickWeights};

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::scalar::Real;

/// Nodal covariates, one row per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateMatrix<T> {
    values: Array2<T>,
    includes_intercept: bool,
}

impl<T: Real> CovariateMatrix<T> {
    pub fn new(values: Array2<T>, includes_intercept: bool) -> Result<Self> {
        ensure!(values.ncols() > 0, Shape, "covariate matrix has no columns");
        ensure!(values.iter().all(|v| v.is_finite()), Invalid, "covariates must be finite");
        Ok(Self { values, includes_intercept })
    }

    /// The `N × 1` matrix of ones.
    pub fn intercept_only(n: usize) -> Self {
        Self { values: Array2::from_elem((n, 1), T::one()), includes_intercept: true }
    }

    /// Appends a column of ones unless one is already flagged.
    pub fn with_intercept(self) -> Self {
        if self.includes_intercept {
            return self;
        }
        let (n, p) = self.values.dim();
        let mut values = Array2::from_elem((n, p + 1), T::one());
        values.slice_mut(ndarray::s![.., ..p]).assign(&self.values);
        Self { values, includes_intercept: true }
    }

    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn row(&self, i: usize) -> ndarray::ArrayView1<'_, T> {
        self.values.index_axis(Axis(0), i)
    }

    pub fn num_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn includes_intercept(&self) -> bool {
        self.includes_intercept
    }

    pub fn check_nodes(&self, n: usize) -> Result<()> {
        ensure!(
            self.num_rows() == n,
            Shape,
            "covariates have {} rows but the network has {} nodes",
            self.num_rows(),
            n
        );
        Ok(())
    }
}

/// Prior hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters<T> {
    /// Beta prior on block connection probabilities.
    pub alpha0: T,
    pub beta0: T,
    /// GEM concentration of the layer-group sticks.
    pub eta0: T,
    /// Inverse-gamma prior on the probit weight variances.
    pub nu0: T,
    pub omega0: T,
    /// Prior mean of the probit weight centres.
    pub mu: Vec<T>,
}

impl<T: Real> Hyperparameters<T> {
    /// Weak proper defaults: α₀ = β₀ = η₀ = 1, ν₀ = 2, ω₀ = 1, μ = 0.
    pub fn default_for(num_features: usize) -> Self {
        Self {
            alpha0: T::one(),
            beta0: T::one(),
            eta0: T::one(),
            nu0: T::lit(2.0),
            omega0: T::one(),
            mu: vec![T::zero(); num_features],
        }
    }

    pub fn validate(&self, num_features: usize) -> Result<()> {
        for (name, v) in [
            ("alpha0", self.alpha0),
            ("beta0", self.beta0),
            ("eta0", self.eta0),
            ("nu0", self.nu0),
            ("omega0", self.omega0),
        ] {
            ensure!(v > T::zero() && v.is_finite(), Domain, "{name} must be positive and finite, got {v}");
        }
        ensure!(
            self.mu.len() == num_features,
            Shape,
            "mu has length {} but there are {} covariates",
            self.mu.len(),
            num_features
        );
        ensure!(self.mu.iter().all(|m| m.is_finite()), Domain, "mu must be finite");
        Ok(())
    }
}

/// Variational truncation levels for global (`m_w`) and layer (`m_z`) groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationConfig {
    pub m_w: usize,
    pub m_z: usize,
}

impl TruncationConfig {
    pub fn new(m_w: usize, m_z: usize) -> Result<Self> {
        ensure!(m_w >= 1 && m_z >= 1, Domain, "truncations must be at least 1 (got m_w={m_w}, m_z={m_z})");
        Ok(Self { m_w, m_z })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn intercept_is_appended_once() {
        let x = CovariateMatrix::new(array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]], false).unwrap();
        let x = x.with_intercept();
        assert_eq!(x.values(), &array![[1.0, 2.0, 1.0], [3.0, 4.0, 1.0], [5.0, 6.0, 1.0]]);
        assert_eq!(x.clone().with_intercept(), x);
        assert!(CovariateMatrix::new(array![[f64::NAN]], false).is_err());
        assert!(x.check_nodes(4).is_err());
    }

    #[test]
    fn hyperparameter_validation() {
        let h = Hyperparameters::<f64>::default_for(2);
        assert!(h.validate(2).is_ok());
        assert!(h.validate(3).is_err());
        let bad = Hyperparameters { eta0: 0.0, ..h };
        assert!(bad.validate(2).is_err());
        assert!(TruncationConfig::new(0, 2).is_err());
    }
}
