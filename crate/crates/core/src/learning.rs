//! Structure search and parameter estimation from a discretized series.
//!
//! Consecutive observations are not independent, so instead of scoring rows
//! directly every time step `t ≥ p` contributes one sliding-window record
//! holding slices `t-p..=t`. Each leading-slice variable is scored against
//! those records with the Cooper–Herskovits metric, treating the earlier
//! slices as ordinary candidate parents. This decomposition is one reading of
//! how a K2-style metric extends to temporally dependent data; it is not the
//! only possible one.
//!
//! Records with any missing value are left out of both scoring and tallying.

use std::collections::{BTreeMap, HashMap};

use crate::adaptation::DEFAULT_ALPHA;
use crate::error::{Error, Result};
use crate::model::{ConvexCpd, Dnm, DnmStructure, LagRef};
use crate::network::{config_index, Cpt, Variable};
use crate::preprocess::DiscreteSeries;

pub const DEFAULT_SMOOTHING: f64 = 1.0;

/// States of every variable at lags `p..=0`, oldest slice first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowRecord {
    pub states: Vec<Option<usize>>,
    pub complete: bool,
}

/// Sliding-window records of one series.
#[derive(Debug, Clone, PartialEq)]
pub struct Windows {
    variables: Vec<Variable>,
    order: usize,
    records: Vec<WindowRecord>,
}

impl Windows {
    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn records(&self) -> &[WindowRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Position of `r` inside a record's flattened state vector.
    pub fn offset(&self, r: LagRef) -> usize {
        (self.order - r.lag) * self.variables.len() + r.var
    }

    fn complete(&self) -> impl Iterator<Item = &WindowRecord> {
        self.records.iter().filter(|r| r.complete)
    }
}

/// One record per `t` in `p..len`.
pub fn build_windows(series: &DiscreteSeries, order: usize) -> Result<Windows> {
    if series.len() <= order {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            order,
        });
    }
    let records = (order..series.len())
        .map(|t| {
            let states: Vec<Option<usize>> = series.rows()[t - order..=t].iter().flatten().copied().collect();
            let complete = states.iter().all(Option::is_some);
            WindowRecord { states, complete }
        })
        .collect();
    Ok(Windows {
        variables: series.variables().to_vec(),
        order,
        records,
    })
}

/// Memoized log-factorials and family scores.
#[derive(Debug, Default)]
pub struct ScoreCache {
    ln_fact: Vec<f64>,
    scores: HashMap<(usize, Vec<LagRef>), f64>,
    hits: usize,
}

impl ScoreCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn hits(&self) -> usize {
        self.hits
    }

    fn ln_fact(&mut self, n: usize) -> f64 {
        if self.ln_fact.is_empty() {
            self.ln_fact.push(0.0);
        }
        while self.ln_fact.len() <= n {
            let k = self.ln_fact.len();
            let next = self.ln_fact[k - 1] + (k as f64).ln();
            self.ln_fact.push(next);
        }
        self.ln_fact[n]
    }

    /// Cached [`k2_score`]; the parent set is treated as unordered.
    pub fn score(&mut self, windows: &Windows, child: usize, parents: &[LagRef]) -> f64 {
        let mut key = parents.to_vec();
        key.sort();
        if let Some(&s) = self.scores.get(&(child, key.clone())) {
            self.hits += 1;
            return s;
        }
        let s = self.compute(windows, child, &key);
        self.scores.insert((child, key), s);
        s
    }

    fn compute(&mut self, windows: &Windows, child: usize, parents: &[LagRef]) -> f64 {
        let r = windows.variables[child].cardinality;
        let cards: Vec<usize> = parents.iter().map(|p| windows.variables[p.var].cardinality).collect();
        let offsets: Vec<usize> = parents.iter().map(|&p| windows.offset(p)).collect();
        let child_at = windows.offset(LagRef::new(child, 0));

        // ordered so the floating-point sum does not depend on hash order
        let mut counts: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut config = vec![0; parents.len()];
        for rec in windows.complete() {
            for (c, &o) in config.iter_mut().zip(&offsets) {
                *c = rec.states[o].expect("complete record");
            }
            let row = counts.entry(config_index(&cards, &config)).or_insert_with(|| vec![0; r]);
            row[rec.states[child_at].expect("complete record")] += 1;
        }

        let mut total = 0.0;
        for row in counts.values() {
            let n_j: usize = row.iter().sum();
            total += self.ln_fact(r - 1) - self.ln_fact(n_j + r - 1);
            for &n_jk in row {
                total += self.ln_fact(n_jk);
            }
        }
        total
    }
}

/// Log Cooper–Herskovits score of `child` (at lag 0) given `parents`.
/// Parent configurations that never occur contribute `log 1 = 0`.
pub fn k2_score(windows: &Windows, child: usize, parents: &[LagRef]) -> f64 {
    ScoreCache::new().score(windows, child, parents)
}

/// Greedy K2 over the leading slice. Lag-0 candidates are restricted to
/// variables earlier in `ordering`, so the contemporaneous graph is acyclic.
pub fn learn_structure(windows: &Windows, ordering: &[usize], max_parents: usize) -> Result<DnmStructure> {
    learn_structure_with_cache(windows, ordering, max_parents, &mut ScoreCache::new())
}

pub fn learn_structure_with_cache(
    windows: &Windows,
    ordering: &[usize],
    max_parents: usize,
    cache: &mut ScoreCache,
) -> Result<DnmStructure> {
    let n = windows.variables.len();
    let mut seen = vec![false; n];
    for &v in ordering {
        if v >= n || std::mem::replace(&mut seen[v], true) {
            return Err(Error::InvalidArgument(format!("ordering {ordering:?} is not a permutation of 0..{n}")));
        }
    }
    if ordering.len() != n {
        return Err(Error::InvalidArgument(format!("ordering {ordering:?} is not a permutation of 0..{n}")));
    }

    let mut contemporaneous = vec![Vec::new(); n];
    let mut lagged = vec![Vec::new(); n];
    for (pos, &child) in ordering.iter().enumerate() {
        let mut candidates: Vec<LagRef> = ordering[..pos].iter().map(|&v| LagRef::new(v, 0)).collect();
        for lag in 1..=windows.order {
            candidates.extend((0..n).map(|v| LagRef::new(v, lag)));
        }

        let mut parents: Vec<LagRef> = Vec::new();
        let mut current = cache.score(windows, child, &parents);
        while parents.len() < max_parents {
            let mut best: Option<(f64, LagRef)> = None;
            for &c in &candidates {
                if parents.contains(&c) {
                    continue;
                }
                parents.push(c);
                let s = cache.score(windows, child, &parents);
                parents.pop();
                if best.is_none_or(|(b, _)| s > b) {
                    best = Some((s, c));
                }
            }
            match best {
                Some((s, c)) if s > current => {
                    log::debug!("{}: add {c:?} ({current:.3} -> {s:.3})", windows.variables[child].name);
                    parents.push(c);
                    current = s;
                }
                _ => break,
            }
        }

        parents.sort();
        for p in parents {
            if p.lag == 0 {
                contemporaneous[child].push(p.var);
            } else {
                lagged[child].push(p);
            }
        }
    }
    DnmStructure::new(windows.variables.clone(), windows.order, contemporaneous, lagged)
}

/// Tallies the contemporaneous and lagged tables of every variable with
/// additive smoothing `s`. Rows without data (possible only when `s = 0`)
/// are uniform. Representative values default to the state indices and
/// every α starts at 0.5.
pub fn estimate_cpds(structure: &DnmStructure, windows: &Windows, smoothing: f64) -> Result<Dnm> {
    if !(smoothing >= 0.0) || !smoothing.is_finite() {
        return Err(Error::InvalidArgument(format!("smoothing {smoothing} must be finite and non-negative")));
    }
    if structure.variables() != windows.variables() {
        return Err(Error::InvalidArgument("structure and records use different variables".into()));
    }
    if structure.max_lag() > windows.order {
        return Err(Error::InvalidArgument(format!(
            "structure uses lag {} but records only span {}",
            structure.max_lag(),
            windows.order
        )));
    }

    let n = structure.n_vars();
    let mut cpds = Vec::with_capacity(n);
    let mut marginals = Vec::with_capacity(n);
    for var in 0..n {
        let pi: Vec<LagRef> = structure.contemporaneous(var).iter().map(|&p| LagRef::new(p, 0)).collect();
        let cpt_c = tally(windows, var, &pi, smoothing)?;
        let cpt_nc = tally(windows, var, structure.lagged(var), smoothing)?;
        cpds.push(ConvexCpd::new(cpt_c, cpt_nc, DEFAULT_ALPHA)?);
        marginals.push(tally(windows, var, &[], smoothing)?.probs().to_vec());
    }
    let values = structure
        .variables()
        .iter()
        .map(|v| (0..v.cardinality).map(|s| s as f64).collect())
        .collect();
    Dnm::new(structure.clone(), cpds, marginals, values)
}

fn tally(windows: &Windows, child: usize, parents: &[LagRef], s: f64) -> Result<Cpt> {
    let r = windows.variables[child].cardinality;
    let cards: Vec<usize> = parents.iter().map(|p| windows.variables[p.var].cardinality).collect();
    let rows: usize = cards.iter().product();
    let offsets: Vec<usize> = parents.iter().map(|&p| windows.offset(p)).collect();
    let child_at = windows.offset(LagRef::new(child, 0));

    let mut counts = vec![0.0; rows * r];
    let mut config = vec![0; parents.len()];
    for rec in windows.complete() {
        for (c, &o) in config.iter_mut().zip(&offsets) {
            *c = rec.states[o].expect("complete record");
        }
        counts[config_index(&cards, &config) * r + rec.states[child_at].expect("complete record")] += 1.0;
    }
    for row in counts.chunks_mut(r) {
        let total: f64 = row.iter().sum::<f64>() + s * r as f64;
        for x in row.iter_mut() {
            *x = if total > 0.0 { (*x + s) / total } else { 1.0 / r as f64 };
        }
    }
    Cpt::new(r, cards, counts)
}
