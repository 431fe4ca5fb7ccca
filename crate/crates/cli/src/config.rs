//! The run configuration file (TOML). Every field has a default, and the
//! generated default file lists all of them.

use std::path::Path;

use anyhow::{Context, Result};
use hmpsbm::embed::InitConfig;
use hmpsbm::eval::NmiNormalization;
use hmpsbm::vb::{AdamConfig, FitConfig};
use hmpsbm::{Hyperparameters, TruncationConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::io::CovariateOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperSection {
    pub alpha0: f64,
    pub beta0: f64,
    pub eta0: f64,
    pub nu0: f64,
    pub omega0: f64,
    /// Empty means the zero vector of the right length.
    pub mu: Vec<f64>,
}

impl Default for HyperSection {
    fn default() -> Self {
        let h = Hyperparameters::<f64>::default_for(0);
        Self { alpha0: h.alpha0, beta0: h.beta0, eta0: h.eta0, nu0: h.nu0, omega0: h.omega0, mu: Vec::new() }
    }
}

impl HyperSection {
    pub fn resolve(&self, num_features: usize) -> Result<Hyperparameters<f64>> {
        let mu = if self.mu.is_empty() { vec![0.0; num_features] } else { self.mu.clone() };
        let h = Hyperparameters {
            alpha0: self.alpha0,
            beta0: self.beta0,
            eta0: self.eta0,
            nu0: self.nu0,
            omega0: self.omega0,
            mu,
        };
        h.validate(num_features)?;
        Ok(h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub max_steps: usize,
    pub max_decreases: usize,
    pub quadrature_nodes: usize,
    pub mc_samples: usize,
}

impl Default for FitSection {
    fn default() -> Self {
        let f = FitConfig::new(TruncationConfig { m_w: 1, m_z: 1 });
        Self {
            max_iterations: f.max_iterations,
            tolerance: f.tolerance,
            max_steps: f.max_steps,
            max_decreases: f.max_decreases,
            quadrature_nodes: f.quadrature_nodes,
            mc_samples: f.mc_samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationSection {
    pub nmi: NmiNormalization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; 0 leaves the choice to the environment.
    pub threads: usize,
    pub truncation: TruncationConfig,
    pub hyperparameters: HyperSection,
    pub fit: FitSection,
    pub adam: AdamConfig,
    pub init: InitConfig,
    pub covariates: CovariateOptions,
    pub evaluation: EvaluationSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: 0,
            truncation: TruncationConfig { m_w: 5, m_z: 5 },
            hyperparameters: HyperSection::default(),
            fit: FitSection::default(),
            adam: AdamConfig::default(),
            init: InitConfig::default(),
            covariates: CovariateOptions::default(),
            evaluation: EvaluationSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        TruncationConfig::new(self.truncation.m_w, self.truncation.m_z)?;
        self.fit_config().validate()?;
        self.init.validate()?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("the config always serializes")
    }

    /// The default file, with a note on the one field whose default is
    /// not written out literally.
    pub fn default_file() -> String {
        format!("# hmpsbm run configuration\n# hyperparameters.mu = [] means the zero vector\n\n{}", Self::default().to_toml())
    }

    /// SHA-256 of the canonical serialization, in hex.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_toml().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn fit_config(&self) -> FitConfig {
        let mut f = FitConfig::new(self.truncation);
        f.max_iterations = self.fit.max_iterations;
        f.tolerance = self.fit.tolerance;
        f.max_steps = self.fit.max_steps;
        f.max_decreases = self.fit.max_decreases;
        f.quadrature_nodes = self.fit.quadrature_nodes;
        f.mc_samples = self.fit.mc_samples;
        f.adam = self.adam;
        f.seed = self.seed;
        f
    }
}
