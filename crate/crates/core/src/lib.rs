//! Hierarchical multiplex stochastic blockmodel.
//!
//! Nodes of a multiplex network belong to a global group, which sets their
//! distribution over layer-level communities; edges in each layer follow a
//! stochastic blockmodel over those communities. Global group membership is
//! tied to nodal covariates through probit stick-breaking. Inference is
//! truncated mean-field variational Bayes: closed-form coordinate updates
//! plus Adam ascent on the Gaussian probit weights.

pub mod assignment;
pub mod embed;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod model;
pub mod quadrature;
pub mod scalar;
pub mod special;
pub mod vb;

pub use error::{Error, Result};
pub use model::{CovariateMatrix, Hyperparameters, MultiplexNetwork, TruncationConfig};
pub use scalar::Real;

pub type VariationalState64 = vb::VariationalState<f64>;
pub type VariationalState32 = vb::VariationalState<f32>;
pub type Hyperparameters64 = model::Hyperparameters<f64>;
pub type Hyperparameters32 = model::Hyperparameters<f32>;
pub type CovariateMatrix64 = model::CovariateMatrix<f64>;
pub type CovariateMatrix32 = model::CovariateMatrix<f32>;
