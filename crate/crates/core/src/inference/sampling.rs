//! Likelihood weighting: forward-sample unobserved nodes in topological
//! order and weight each sample by the probability of the evidence given its
//! sampled parents.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{point_mass, MarginalSet};
use crate::error::{Error, Result};
use crate::network::{topological_order, Assignment, BeliefNetwork};

pub fn approximate_posterior(
    bn: &BeliefNetwork,
    evidence: &Assignment,
    n_samples: usize,
    seed: u64,
) -> Result<MarginalSet> {
    let all: Vec<usize> = (0..bn.len()).collect();
    approximate_marginals(bn, evidence, &all, n_samples, seed)
}

pub fn approximate_marginals(
    bn: &BeliefNetwork,
    evidence: &Assignment,
    queries: &[usize],
    n_samples: usize,
    seed: u64,
) -> Result<MarginalSet> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    evidence.check(bn)?;
    let order = topological_order(bn)?;
    let e = evidence.as_slice();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut tallies: Vec<Vec<f64>> = bn.cardinalities().into_iter().map(|c| vec![0.0; c]).collect();
    let mut states = vec![0usize; bn.len()];
    let mut parent_buf = Vec::new();
    let mut total = 0.0;

    for _ in 0..n_samples {
        let mut weight = 1.0;
        for &node in &order {
            bn.parent_states(node, &states, &mut parent_buf);
            let row = bn.node(node).cpt.row_for(&parent_buf);
            match e[node] {
                Some(s) => {
                    states[node] = s;
                    weight *= row[s];
                }
                None => states[node] = sample_row(row, rng.random::<f64>()),
            }
        }
        if weight > 0.0 {
            total += weight;
            for (node, &s) in states.iter().enumerate() {
                tallies[node][s] += weight;
            }
        }
    }

    if !(total > 0.0) {
        return Err(Error::NoMassConsistentWithEvidence);
    }

    let mut out = vec![Vec::new(); bn.len()];
    for &q in queries {
        out[q] = match e[q] {
            Some(s) => point_mass(bn.cardinality(q), s),
            None => tallies[q].iter().map(|w| w / total).collect(),
        };
    }
    Ok(MarginalSet::new(out))
}

/// Inverse-CDF draw; rounding slack at the top falls to the last non-zero state.
fn sample_row(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (s, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return s;
        }
    }
    row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
}
