//! Attack hyperparameters and their validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("query budget must be at least 1")]
    BadBudget,
    #[error("perturbation threshold must lie in (0, 1]")]
    BadThreshold,
    #[error("beam size must be at least 1")]
    BadBeamSize,
    #[error("synonym count k must be at least 1")]
    BadSynonymK,
    #[error("kernel width must be a positive finite number")]
    BadKernelWidth,
    #[error("ridge lambda must be a positive finite number")]
    BadRidgeLambda,
    #[error("surrogate query cap must lie in 1..=query_budget")]
    BadSurrogateCap,
}

/// How many oracle queries the surrogate fit may spend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurrogateQueryCap {
    /// `min(n, budget / 2)` for an n-token input.
    Auto,
    #[serde(untagged)]
    Fixed(u64),
}

impl SurrogateQueryCap {
    /// Resolves the number of neighborhood samples for an `n`-token input.
    pub fn samples_for(&self, n: usize, budget: u64) -> usize {
        let cap = match self {
            SurrogateQueryCap::Auto => budget / 2,
            SurrogateQueryCap::Fixed(c) => *c,
        };
        n.min(cap as usize)
    }
}

/// Distance plugged into the exponential kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelDistance {
    /// Use the raw cosine between mask vectors as the distance term.
    Cosine,
    /// Use `1 - cosine` instead.
    OneMinusCosine,
}

/// Everything that shapes a single attack run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AttackConfig<F: Scalar = f64> {
    /// Hard cap on oracle queries per attacked sample.
    pub query_budget: u64,
    /// Successes must perturb strictly less than this fraction of tokens.
    pub pert_threshold: F,
    /// Beam width b; the stratified rule keeps 3 * (b / 3) states.
    pub beam_size: usize,
    /// Synonyms drawn per substituted position.
    pub synonym_k: usize,
    /// Kernel width sigma for neighborhood sample weighting.
    pub kernel_width: F,
    /// Ridge penalty lambda on the surrogate coefficients.
    pub ridge_lambda: F,
    pub surrogate_query_cap: SurrogateQueryCap,
    pub kernel_distance: KernelDistance,
    /// Run seed; per-sample streams are derived from it.
    pub seed: u64,
}

impl<F: Scalar> Default for AttackConfig<F> {
    fn default() -> Self {
        AttackConfig {
            query_budget: 100,
            pert_threshold: F::from_config(0.10),
            beam_size: 10,
            synonym_k: 50,
            kernel_width: F::from_config(25.0),
            ridge_lambda: F::from_config(1e-3),
            surrogate_query_cap: SurrogateQueryCap::Auto,
            kernel_distance: KernelDistance::Cosine,
            seed: 1234,
        }
    }
}

impl<F: Scalar> AttackConfig<F> {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.query_budget == 0 {
            return Err(ConfigError::BadBudget);
        }
        let one = F::one();
        let zero = F::zero();
        if !self.pert_threshold.is_finite()
            || self.pert_threshold <= zero
            || self.pert_threshold > one
        {
            return Err(ConfigError::BadThreshold);
        }
        if self.beam_size == 0 {
            return Err(ConfigError::BadBeamSize);
        }
        if self.synonym_k == 0 {
            return Err(ConfigError::BadSynonymK);
        }
        if !self.kernel_width.is_finite() || self.kernel_width <= zero {
            return Err(ConfigError::BadKernelWidth);
        }
        if !self.ridge_lambda.is_finite() || self.ridge_lambda <= zero {
            return Err(ConfigError::BadRidgeLambda);
        }
        if let SurrogateQueryCap::Fixed(c) = self.surrogate_query_cap {
            if c == 0 || c > self.query_budget {
                return Err(ConfigError::BadSurrogateCap);
            }
        }
        Ok(())
    }
}
