//! Posterior marginals for a [`BeliefNetwork`] given evidence.
//!
//! Three routes are provided:
//!
//! * [`exact_posterior`]: variable elimination with a minimum-degree order,
//! * [`approximate_posterior`]: likelihood weighting with a seeded RNG,
//! * [`brute_force_posterior`]: joint enumeration, used as a test oracle.
//!
//! Evidence of probability zero is always an error rather than a silent
//! uniform fallback.

mod enumerate;
mod exact;
pub(crate) mod factor;
mod sampling;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::network::{Assignment, BeliefNetwork};

pub use enumerate::{brute_force_posterior, brute_force_posterior_with_cap, DEFAULT_ENUMERATION_CAP};
pub use exact::{exact_marginals, exact_posterior};
pub use sampling::{approximate_marginals, approximate_posterior};

/// One probability vector per node.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSet {
    marginals: Vec<Vec<f64>>,
}

impl MarginalSet {
    pub fn new(marginals: Vec<Vec<f64>>) -> Self {
        Self { marginals }
    }

    pub fn len(&self) -> usize {
        self.marginals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marginals.is_empty()
    }

    pub fn get(&self, node: usize) -> &[f64] {
        &self.marginals[node]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.marginals.iter().map(Vec::as_slice)
    }

    pub fn into_inner(self) -> Vec<Vec<f64>> {
        self.marginals
    }

    /// Largest absolute entry-wise difference against another set.
    pub fn max_abs_diff(&self, other: &MarginalSet) -> f64 {
        self.marginals
            .iter()
            .zip(&other.marginals)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn point_mass(card: usize, state: usize) -> Vec<f64> {
    let mut v = vec![0.0; card];
    v[state] = 1.0;
    v
}

/// Which inference route a forecast uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum InferenceMethod {
    #[default]
    Exact,
    Approximate { samples: usize, seed: u64 },
}

impl InferenceMethod {
    /// Marginals for `queries` only; other entries of the result are empty.
    pub fn marginals(&self, bn: &BeliefNetwork, evidence: &Assignment, queries: &[usize]) -> Result<MarginalSet> {
        match *self {
            InferenceMethod::Exact => exact_marginals(bn, evidence, queries),
            InferenceMethod::Approximate { samples, seed } => {
                approximate_marginals(bn, evidence, queries, samples, seed)
            }
        }
    }
}
