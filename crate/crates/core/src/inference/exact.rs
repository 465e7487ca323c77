use std::collections::BTreeSet;

use super::factor::Factor;
use super::{point_mass, MarginalSet};
use crate::error::{Error, Result};
use crate::network::{Assignment, BeliefNetwork};

/// Posterior marginals of every node by variable elimination.
pub fn exact_posterior(bn: &BeliefNetwork, evidence: &Assignment) -> Result<MarginalSet> {
    let all: Vec<usize> = (0..bn.len()).collect();
    exact_marginals(bn, evidence, &all)
}

/// Posterior marginals of the `queries` nodes; entries for other nodes are left empty.
pub fn exact_marginals(bn: &BeliefNetwork, evidence: &Assignment, queries: &[usize]) -> Result<MarginalSet> {
    evidence.check(bn)?;
    let e = evidence.as_slice();
    let mut out = vec![Vec::new(); bn.len()];
    let mut evidence_checked = false;

    for &q in queries {
        match e[q] {
            Some(s) => out[q] = point_mass(bn.cardinality(q), s),
            None => {
                let unnormalized = eliminate_all_but(bn, e, Some(q));
                let z = unnormalized.total();
                if !(z > 0.0) || !z.is_finite() {
                    return Err(Error::ImpossibleEvidence);
                }
                evidence_checked = true;
                out[q] = unnormalized.values.iter().map(|v| v / z).collect();
            }
        }
    }

    if !evidence_checked && evidence.observed_count() > 0 {
        let z = eliminate_all_but(bn, e, None).total();
        if !(z > 0.0) {
            return Err(Error::ImpossibleEvidence);
        }
    }
    Ok(MarginalSet::new(out))
}

/// Sums every unobserved variable except `keep` out of the product of the
/// evidence-reduced CPTs, after dropping barren nodes.
fn eliminate_all_but(bn: &BeliefNetwork, e: &[Option<usize>], keep: Option<usize>) -> Factor {
    let relevant = relevant_nodes(bn, e, keep);
    let mut factors: Vec<Factor> = relevant
        .iter()
        .map(|&node| Factor::from_cpt(bn, node, e))
        .collect();

    let mut pending: BTreeSet<usize> = relevant
        .iter()
        .copied()
        .filter(|&v| e[v].is_none() && Some(v) != keep)
        .collect();

    while let Some(var) = pick_min_degree(&factors, &pending) {
        pending.remove(&var);
        let (touching, rest): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.vars.contains(&var));
        factors = rest;
        if let Some(product) = touching.into_iter().reduce(|a, b| a.product(&b)) {
            factors.push(product.sum_out(var));
        }
    }

    factors
        .into_iter()
        .fold(Factor::scalar(1.0), |acc, f| acc.product(&f))
}

/// Ancestors of the query and the evidence; everything else is barren.
fn relevant_nodes(bn: &BeliefNetwork, e: &[Option<usize>], keep: Option<usize>) -> Vec<usize> {
    let mut marked = vec![false; bn.len()];
    let mut stack: Vec<usize> = (0..bn.len()).filter(|&i| e[i].is_some()).collect();
    stack.extend(keep);
    while let Some(v) = stack.pop() {
        if marked[v] {
            continue;
        }
        marked[v] = true;
        stack.extend(bn.node(v).parents.iter().copied().filter(|&p| !marked[p]));
    }
    (0..bn.len()).filter(|&i| marked[i]).collect()
}

/// Variable with the fewest neighbours in the current interaction graph;
/// ties go to the lowest index.
fn pick_min_degree(factors: &[Factor], pending: &BTreeSet<usize>) -> Option<usize> {
    pending
        .iter()
        .map(|&v| {
            let mut neighbours = BTreeSet::new();
            for f in factors.iter().filter(|f| f.vars.contains(&v)) {
                neighbours.extend(f.vars.iter().copied().filter(|&u| u != v));
            }
            (neighbours.len(), v)
        })
        .min()
        .map(|(_, v)| v)
}
