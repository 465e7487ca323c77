use super::{point_mass, MarginalSet};
use crate::error::{Error, Result};
use crate::network::{config_count, config_states, joint_of_states, Assignment, BeliefNetwork};

pub const DEFAULT_ENUMERATION_CAP: usize = 1 << 20;

/// Posterior marginals by summing the joint over every assignment
/// consistent with the evidence.
pub fn brute_force_posterior(bn: &BeliefNetwork, evidence: &Assignment) -> Result<MarginalSet> {
    brute_force_posterior_with_cap(bn, evidence, DEFAULT_ENUMERATION_CAP)
}

pub fn brute_force_posterior_with_cap(bn: &BeliefNetwork, evidence: &Assignment, cap: usize) -> Result<MarginalSet> {
    evidence.check(bn)?;
    let states_total = bn.joint_state_count();
    if states_total > cap as f64 {
        return Err(Error::EnumerationCap {
            states: states_total,
            cap,
        });
    }

    let e = evidence.as_slice();
    let free: Vec<usize> = (0..bn.len()).filter(|&i| e[i].is_none()).collect();
    let free_cards: Vec<usize> = free.iter().map(|&i| bn.cardinality(i)).collect();

    let mut states: Vec<usize> = e.iter().map(|s| s.unwrap_or(0)).collect();
    let mut digits = vec![0; free.len()];
    let mut sums: Vec<Vec<f64>> = bn.cardinalities().into_iter().map(|c| vec![0.0; c]).collect();
    let mut z = 0.0;

    for idx in 0..config_count(&free_cards) {
        config_states(&free_cards, idx, &mut digits);
        for (&node, &d) in free.iter().zip(&digits) {
            states[node] = d;
        }
        let p = joint_of_states(bn, &states);
        z += p;
        for &node in &free {
            sums[node][states[node]] += p;
        }
    }

    if !(z > 0.0) {
        return Err(Error::ImpossibleEvidence);
    }
    let marginals = (0..bn.len())
        .map(|i| match e[i] {
            Some(s) => point_mass(bn.cardinality(i), s),
            None => sums[i].iter().map(|p| p / z).collect(),
        })
        .collect();
    Ok(MarginalSet::new(marginals))
}
