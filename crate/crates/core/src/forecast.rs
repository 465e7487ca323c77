//! One- through k-step-ahead forecast distributions.
//!
//! Step 1 runs inference on the unrolled network with the observed history
//! instantiated. Each later step slides the window forward by one slice: any
//! node that was uninstantiated in the previous network becomes a root whose
//! prior is its marginal from that network, and its incoming arcs are
//! dropped. Forecasts therefore enter later steps as independent priors.
//!
//! Because history slices turn into prior slices one at a time, a model whose
//! deepest lag is `l` needs at most `l` structurally different networks.

use crate::error::Result;
use crate::inference::InferenceMethod;
use crate::model::{build_step_network, Carried, Dnm, HistoryWindow, UnrolledNetwork};

/// Forecast distributions for every variable at one horizon step.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastSet {
    pub step: usize,
    pub distributions: Vec<Vec<f64>>,
    pub expected: Vec<f64>,
}

impl ForecastSet {
    /// Index of the most probable state of `var`, lowest index on ties.
    pub fn mode(&self, var: usize) -> usize {
        argmax(&self.distributions[var])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KStepForecast {
    pub steps: Vec<ForecastSet>,
    /// Number of structurally distinct networks built along the way.
    pub distinct_structures: usize,
}

pub fn expected_value(dist: &[f64], values: &[f64]) -> f64 {
    assert_eq!(dist.len(), values.len(), "distribution and values differ in length");
    dist.iter().zip(values).map(|(p, v)| p * v).sum()
}

pub fn one_step_forecast(dnm: &Dnm, window: &HistoryWindow, method: InferenceMethod) -> Result<ForecastSet> {
    let mut k = k_step_forecast(dnm, window, 1, method)?;
    Ok(k.steps.remove(0))
}

pub fn k_step_forecast(dnm: &Dnm, window: &HistoryWindow, k: usize, method: InferenceMethod) -> Result<KStepForecast> {
    let n = dnm.n_vars();
    let l = dnm.window_len();
    let mut carried = Carried::new();
    let mut signatures = Vec::new();
    let mut steps = Vec::with_capacity(k);

    for h in 1..=k {
        let unrolled = build_step_network(dnm, window, h, &carried)?;
        let sig = unrolled.signature();
        if !signatures.contains(&sig) {
            signatures.push(sig);
        }

        let mut queries: Vec<usize> = (0..n).map(|v| unrolled.leading(v)).collect();
        let kept = if h < k { still_needed(&unrolled, l, h) } else { Vec::new() };
        queries.extend(kept.iter().map(|&(node, _, _)| node));

        let step_method = match method {
            InferenceMethod::Approximate { samples, seed } => InferenceMethod::Approximate {
                samples,
                seed: seed.wrapping_add(h as u64 - 1),
            },
            exact => exact,
        };
        let marginals = step_method.marginals(&unrolled.network, &unrolled.evidence, &queries)?;

        let distributions: Vec<Vec<f64>> = (0..n)
            .map(|v| marginals.get(unrolled.leading(v)).to_vec())
            .collect();
        for (v, d) in distributions.iter().enumerate() {
            carried.insert((h as i64, v), d.clone());
        }
        for (node, time, var) in kept {
            carried.insert((time, var), marginals.get(node).to_vec());
        }

        let expected = distributions
            .iter()
            .enumerate()
            .map(|(v, d)| expected_value(d, dnm.representative_values(v)))
            .collect();
        steps.push(ForecastSet {
            step: h,
            distributions,
            expected,
        });
    }

    Ok(KStepForecast {
        steps,
        distinct_structures: signatures.len(),
    })
}

/// Uninstantiated history nodes that remain inside the next step's window,
/// as `(node, time, var)`.
fn still_needed(u: &UnrolledNetwork, l: usize, h: usize) -> Vec<(usize, i64, usize)> {
    let next_oldest = h as i64 + 1 - l as i64;
    let n = u.network.len() / u.slices();
    let mut out = Vec::new();
    for slice in 0..u.slices() - 1 {
        let time = u.time_of(slice);
        if time > 0 || time < next_oldest {
            continue;
        }
        for var in 0..n {
            let node = u.node_index(var, slice);
            if u.evidence.get(node).is_none() {
                out.push((node, time, var));
            }
        }
    }
    out
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}
