//! Dynamic network models.
//!
//! A DNM describes a set of discrete variables observed once per time step.
//! Each variable has *contemporaneous* parents (other variables in the same
//! time slice) and *lagged* parents (variables `1..=p` slices back). Its
//! conditional distribution is the convex combination
//!
//! ```text
//! Pr(X | π, θ) = (1 - α) · Pr(X | π) + α · Pr(X | θ)
//! ```
//!
//! of a contemporaneous table over `π` and a lagged table over `θ`, with a
//! per-variable weight `α ∈ [0, 1]`.
//!
//! [`unroll`] turns a DNM plus a window of recent observations into an
//! ordinary [`BeliefNetwork`] covering the window and the next time step.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Assignment, BeliefNetwork, Cpt, Node, Variable};

/// A variable `lag` slices before the leading slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LagRef {
    pub var: usize,
    pub lag: usize,
}

impl LagRef {
    pub fn new(var: usize, lag: usize) -> Self {
        Self { var, lag }
    }
}

/// Variables, model order and the two parent sets of every variable.
#[derive(Debug, Clone, PartialEq)]
pub struct DnmStructure {
    variables: Vec<Variable>,
    order: usize,
    contemporaneous: Vec<Vec<usize>>,
    lagged: Vec<Vec<LagRef>>,
}

impl DnmStructure {
    pub fn new(
        variables: Vec<Variable>,
        order: usize,
        contemporaneous: Vec<Vec<usize>>,
        lagged: Vec<Vec<LagRef>>,
    ) -> Result<Self> {
        let n = variables.len();
        if order == 0 {
            return Err(Error::InvalidStructure("model order must be at least 1".into()));
        }
        if contemporaneous.len() != n || lagged.len() != n {
            return Err(Error::InvalidStructure(format!(
                "parent sets given for {} / {} variables, expected {n}",
                contemporaneous.len(),
                lagged.len()
            )));
        }
        for (i, var) in variables.iter().enumerate() {
            if var.cardinality == 0 {
                return Err(Error::InvalidStructure(format!("`{}` has cardinality 0", var.name)));
            }
            if variables[..i].iter().any(|v| v.name == var.name) {
                return Err(Error::InvalidStructure(format!("duplicate variable `{}`", var.name)));
            }
            let pi = &contemporaneous[i];
            for (k, &p) in pi.iter().enumerate() {
                if p >= n || p == i || pi[..k].contains(&p) {
                    return Err(Error::InvalidStructure(format!(
                        "bad contemporaneous parent {p} for `{}`",
                        var.name
                    )));
                }
            }
            let theta = &lagged[i];
            for (k, r) in theta.iter().enumerate() {
                if r.var >= n || r.lag == 0 || r.lag > order || theta[..k].contains(r) {
                    return Err(Error::InvalidStructure(format!(
                        "bad lagged parent {r:?} for `{}` (order {order})",
                        var.name
                    )));
                }
            }
        }
        let s = Self {
            variables,
            order,
            contemporaneous,
            lagged,
        };
        s.contemporaneous_order()?;
        Ok(s)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn contemporaneous(&self, var: usize) -> &[usize] {
        &self.contemporaneous[var]
    }

    pub fn lagged(&self, var: usize) -> &[LagRef] {
        &self.lagged[var]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Deepest lag used by any lagged parent (`l`); at most the order.
    pub fn max_lag(&self) -> usize {
        self.lagged
            .iter()
            .flatten()
            .map(|r| r.lag)
            .max()
            .unwrap_or(0)
    }

    /// All arcs into the leading slice, contemporaneous ones as lag 0.
    pub fn arcs(&self) -> Vec<(LagRef, usize)> {
        let mut arcs = Vec::new();
        for child in 0..self.n_vars() {
            arcs.extend(self.contemporaneous[child].iter().map(|&p| (LagRef::new(p, 0), child)));
            arcs.extend(self.lagged[child].iter().map(|&r| (r, child)));
        }
        arcs.sort();
        arcs
    }

    /// Topological order of the lag-0 subgraph; errors on a cycle.
    pub fn contemporaneous_order(&self) -> Result<Vec<usize>> {
        let nodes = (0..self.n_vars())
            .map(|i| {
                let v = self.variables[i].clone();
                let cards = self.contemporaneous[i]
                    .iter()
                    .map(|&p| self.variables[p].cardinality)
                    .collect();
                Node::new(v.clone(), self.contemporaneous[i].clone(), Cpt::uniform(v.cardinality, cards))
            })
            .collect();
        crate::network::topological_order(&BeliefNetwork::new(nodes))
    }

    fn cards_of(&self, vars: impl Iterator<Item = usize>) -> Vec<usize> {
        vars.map(|v| self.variables[v].cardinality).collect()
    }

    pub fn contemporaneous_cards(&self, var: usize) -> Vec<usize> {
        self.cards_of(self.contemporaneous[var].iter().copied())
    }

    pub fn lagged_cards(&self, var: usize) -> Vec<usize> {
        self.cards_of(self.lagged[var].iter().map(|r| r.var))
    }
}

/// The two tables of one variable and their mixing weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexCpd {
    pub cpt_c: Cpt,
    pub cpt_nc: Cpt,
    pub alpha: f64,
}

impl ConvexCpd {
    pub fn new(cpt_c: Cpt, cpt_nc: Cpt, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!("alpha {alpha} outside [0, 1]")));
        }
        if cpt_c.cardinality() != cpt_nc.cardinality() {
            return Err(Error::InvalidArgument(
                "contemporaneous and lagged tables disagree on cardinality".into(),
            ));
        }
        Ok(Self { cpt_c, cpt_nc, alpha })
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self {
            alpha,
            ..self.clone()
        }
    }

    /// `(1 - α) · row_c + α · row_nc` for the given parent configurations.
    pub fn eval(&self, c_config: &[usize], nc_config: &[usize]) -> Vec<f64> {
        mix(self.cpt_c.row_for(c_config), self.cpt_nc.row_for(nc_config), self.alpha)
    }

    /// A single table over the contemporaneous parents followed by the
    /// lagged parents, every row given by [`ConvexCpd::eval`].
    pub fn flatten(&self) -> Cpt {
        let nc_rows = self.cpt_nc.row_count();
        let rows = self.cpt_c.row_count() * nc_rows;
        let mut probs = Vec::with_capacity(rows * self.cpt_c.cardinality());
        for j in 0..rows {
            probs.extend(mix(self.cpt_c.row(j / nc_rows), self.cpt_nc.row(j % nc_rows), self.alpha));
        }
        let mut cards = self.cpt_c.parent_cards().to_vec();
        cards.extend_from_slice(self.cpt_nc.parent_cards());
        Cpt::new(self.cpt_c.cardinality(), cards, probs).expect("flattened shape is consistent")
    }
}

fn mix(row_c: &[f64], row_nc: &[f64], alpha: f64) -> Vec<f64> {
    row_c
        .iter()
        .zip(row_nc)
        .map(|(c, nc)| (1.0 - alpha) * c + alpha * nc)
        .collect()
}

/// Structure, convex CPDs, boundary priors and representative state values.
#[derive(Debug, Clone, PartialEq)]
pub struct Dnm {
    structure: DnmStructure,
    cpds: Vec<ConvexCpd>,
    marginals: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
}

impl Dnm {
    pub fn new(
        structure: DnmStructure,
        cpds: Vec<ConvexCpd>,
        marginals: Vec<Vec<f64>>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = structure.n_vars();
        if cpds.len() != n || marginals.len() != n || values.len() != n {
            return Err(Error::InvalidStructure(format!(
                "expected {n} CPDs, marginals and value lists"
            )));
        }
        for i in 0..n {
            let var = &structure.variables()[i];
            let cpd = &cpds[i];
            if cpd.cpt_c.cardinality() != var.cardinality
                || cpd.cpt_c.parent_cards() != structure.contemporaneous_cards(i)
                || cpd.cpt_nc.parent_cards() != structure.lagged_cards(i)
            {
                return Err(Error::InvalidStructure(format!(
                    "CPD of `{}` does not match its parent sets",
                    var.name
                )));
            }
            if marginals[i].len() != var.cardinality || values[i].len() != var.cardinality {
                return Err(Error::InvalidStructure(format!(
                    "marginal or representative values of `{}` have the wrong length",
                    var.name
                )));
            }
        }
        Ok(Self {
            structure,
            cpds,
            marginals,
            values,
        })
    }

    pub fn structure(&self) -> &DnmStructure {
        &self.structure
    }

    pub fn variables(&self) -> &[Variable] {
        self.structure.variables()
    }

    pub fn n_vars(&self) -> usize {
        self.structure.n_vars()
    }

    pub fn cpd(&self, var: usize) -> &ConvexCpd {
        &self.cpds[var]
    }

    pub fn cpds(&self) -> &[ConvexCpd] {
        &self.cpds
    }

    pub fn marginal(&self, var: usize) -> &[f64] {
        &self.marginals[var]
    }

    pub fn representative_values(&self, var: usize) -> &[f64] {
        &self.values[var]
    }

    pub fn alpha(&self, var: usize) -> f64 {
        self.cpds[var].alpha
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.cpds.iter().map(|c| c.alpha).collect()
    }

    /// Number of history slices an unrolled network needs.
    pub fn window_len(&self) -> usize {
        self.structure.max_lag()
    }

    pub fn with_alpha(&self, var: usize, alpha: f64) -> Self {
        let mut m = self.clone();
        m.cpds[var].alpha = alpha;
        m
    }

    pub fn with_alphas(&self, alphas: &[f64]) -> Self {
        let mut m = self.clone();
        for (cpd, &a) in m.cpds.iter_mut().zip(alphas) {
            cpd.alpha = a;
        }
        m
    }

    pub fn with_representative_values(mut self, values: Vec<Vec<f64>>) -> Result<Self> {
        for (i, v) in values.iter().enumerate() {
            if v.len() != self.structure.variables()[i].cardinality {
                return Err(Error::InvalidArgument(format!(
                    "representative values for `{}` have the wrong length",
                    self.structure.variables()[i].name
                )));
            }
        }
        self.values = values;
        Ok(self)
    }
}

/// Observed states for consecutive time slices, oldest first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HistoryWindow {
    slices: Vec<Vec<Option<usize>>>,
}

impl HistoryWindow {
    pub fn new(slices: Vec<Vec<Option<usize>>>) -> Self {
        Self { slices }
    }

    pub fn observed(slices: Vec<Vec<usize>>) -> Self {
        Self::new(
            slices
                .into_iter()
                .map(|s| s.into_iter().map(Some).collect())
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn slices(&self) -> &[Vec<Option<usize>>] {
        &self.slices
    }

    /// The most recent `len` slices.
    pub fn tail(&self, len: usize) -> &[Vec<Option<usize>>] {
        &self.slices[self.slices.len() - len..]
    }

    pub fn is_fully_observed(&self) -> bool {
        self.slices.iter().flatten().all(Option::is_some)
    }
}

/// How an unrolled node gets its distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeRole {
    /// Flattened convex CPT over its in-window parents.
    Conditional,
    /// Root at the edge of the window.
    Boundary,
    /// Root whose prior is a marginal carried over from the previous forecast network.
    Carried,
}

/// A network built from a DNM for one forecast step.
#[derive(Debug, Clone)]
pub struct UnrolledNetwork {
    pub network: BeliefNetwork,
    pub evidence: Assignment,
    pub roles: Vec<NodeRole>,
    n_vars: usize,
    slices: usize,
    step: usize,
}

impl UnrolledNetwork {
    pub fn node_index(&self, var: usize, slice: usize) -> usize {
        slice * self.n_vars + var
    }

    /// Index of `var` in the leading (forecast) slice.
    pub fn leading(&self, var: usize) -> usize {
        self.node_index(var, self.slices - 1)
    }

    pub fn slices(&self) -> usize {
        self.slices
    }

    /// Time of `slice` relative to the forecast origin.
    pub fn time_of(&self, slice: usize) -> i64 {
        time_of(self.step, self.slices - 1, slice)
    }

    /// Topology used to count structurally distinct forecast networks.
    pub fn signature(&self) -> Vec<(Vec<usize>, NodeRole)> {
        self.network
            .nodes()
            .iter()
            .zip(&self.roles)
            .map(|(n, r)| (n.parents.clone(), *r))
            .collect()
    }
}

fn time_of(step: usize, l: usize, slice: usize) -> i64 {
    step as i64 - l as i64 + slice as i64
}

/// Marginals carried between forecast steps, keyed by (time, variable).
pub(crate) type Carried = HashMap<(i64, usize), Vec<f64>>;

/// Builds the one-step forecast network for the origin at the end of
/// `window`. Observed history is returned as evidence.
pub fn unroll(dnm: &Dnm, window: &HistoryWindow) -> Result<UnrolledNetwork> {
    build_step_network(dnm, window, 1, &Carried::new())
}

/// The network for forecast step `step`. History slices at times after the
/// origin, and history values left uninstantiated by the previous step, become
/// roots whose priors come from `carried`. The oldest slice is always a row of roots.
pub(crate) fn build_step_network(
    dnm: &Dnm,
    window: &HistoryWindow,
    step: usize,
    carried: &Carried,
) -> Result<UnrolledNetwork> {
    let l = dnm.window_len();
    if window.len() < l {
        return Err(Error::WindowTooShort {
            needed: l,
            got: window.len(),
        });
    }
    let history = window.tail(l);
    let n = dnm.n_vars();
    let s = dnm.structure();
    let slices = l + 1;

    let observed = |var: usize, time: i64| -> Option<usize> {
        if time > 0 {
            return None;
        }
        // time 0 is the last history slice
        let idx = (l as i64 - 1 + time) as usize;
        history[idx][var]
    };
    let carried_prior = |var: usize, time: i64| -> Result<Vec<f64>> {
        carried.get(&(time, var)).cloned().ok_or_else(|| {
            Error::InvalidArgument(format!("no carried marginal for variable {var} at time {time}"))
        })
    };

    // Roots whose prior was carried over from an earlier step.
    let carries = |slice: usize, var: usize| -> bool {
        let time = time_of(step, l, slice);
        slice != l && (time > 0 || (step > 1 && observed(var, time).is_none()))
    };

    let mut nodes = Vec::with_capacity(slices * n);
    let mut roles = Vec::with_capacity(slices * n);
    let mut evidence = Assignment::empty(slices * n);

    for slice in 0..slices {
        let time = time_of(step, l, slice);
        let parent_indices = |var: usize| -> Option<Vec<usize>> {
            let mut ps: Vec<usize> = s.contemporaneous(var).iter().map(|&p| slice * n + p).collect();
            for r in s.lagged(var) {
                let ps_slice = slice.checked_sub(r.lag)?;
                ps.push(ps_slice * n + r.var);
            }
            Some(ps)
        };

        for var in 0..n {
            let v = &s.variables()[var];
            let variable = Variable::new(node_name(&v.name, time), v.cardinality, v.kind);
            let obs = observed(var, time);
            if let Some(state) = obs {
                evidence.set(slice * n + var, state);
            }

            let role = if slice == l {
                NodeRole::Conditional
            } else if slice == 0 {
                NodeRole::Boundary
            } else if carries(slice, var) {
                NodeRole::Carried
            } else {
                match parent_indices(var) {
                    // an observed node under a carried prior would count its
                    // evidence twice
                    Some(ps) if !ps.iter().any(|&p| carries(p / n, p % n)) => NodeRole::Conditional,
                    _ => NodeRole::Boundary,
                }
            };

            let node = match role {
                NodeRole::Conditional => {
                    let parents = parent_indices(var).expect("conditional node has in-window parents");
                    Node::new(variable, parents, dnm.cpd(var).flatten())
                }
                NodeRole::Carried => Node::root(variable, carried_prior(var, time)?)?,
                NodeRole::Boundary => {
                    let prior = if carries(slice, var) {
                        carried_prior(var, time)?
                    } else {
                        dnm.marginal(var).to_vec()
                    };
                    Node::root(variable, prior)?
                }
            };
            nodes.push(node);
            roles.push(role);
        }
    }

    Ok(UnrolledNetwork {
        network: BeliefNetwork::new(nodes),
        evidence,
        roles,
        n_vars: n,
        slices,
        step,
    })
}

fn node_name(name: &str, time: i64) -> String {
    match time {
        0 => format!("{name}@t"),
        t => format!("{name}@t{t:+}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::validate_network;

    fn binary(name: &str) -> Variable {
        Variable::discretized(name, 2)
    }

    #[test]
    fn convex_endpoints_and_midpoint() {
        let c = Cpt::prior(vec![0.2, 0.8]).unwrap();
        let nc = Cpt::prior(vec![0.6, 0.4]).unwrap();
        let cpd = ConvexCpd::new(c, nc, 0.0).unwrap();
        assert_eq!(cpd.eval(&[], &[]), vec![0.2, 0.8]);
        assert_eq!(cpd.with_alpha(1.0).eval(&[], &[]), vec![0.6, 0.4]);
        let mid = cpd.with_alpha(0.5).eval(&[], &[]);
        assert!((mid[0] - 0.4).abs() < 1e-15 && (mid[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn alpha_outside_unit_interval_is_rejected() {
        let c = Cpt::prior(vec![0.5, 0.5]).unwrap();
        assert!(ConvexCpd::new(c.clone(), c, 1.5).is_err());
    }

    #[test]
    fn structure_rejects_contemporaneous_cycle_and_bad_lags() {
        let vars = vec![binary("A"), binary("B")];
        assert!(DnmStructure::new(vars.clone(), 1, vec![vec![1], vec![0]], vec![vec![], vec![]]).is_err());
        assert!(DnmStructure::new(vars.clone(), 1, vec![vec![], vec![]], vec![vec![LagRef::new(0, 2)], vec![]]).is_err());
        assert!(DnmStructure::new(vars.clone(), 1, vec![vec![], vec![]], vec![vec![LagRef::new(0, 0)], vec![]]).is_err());
        let ok = DnmStructure::new(vars, 2, vec![vec![], vec![0]], vec![vec![LagRef::new(0, 2)], vec![]]).unwrap();
        assert_eq!(ok.max_lag(), 2);
    }

    fn two_var_dnm(alpha: f64) -> Dnm {
        // B depends on A now and on B one step back.
        let s = DnmStructure::new(
            vec![binary("A"), binary("B")],
            1,
            vec![vec![], vec![0]],
            vec![vec![LagRef::new(0, 1)], vec![LagRef::new(1, 1)]],
        )
        .unwrap();
        let a = ConvexCpd::new(
            Cpt::prior(vec![0.5, 0.5]).unwrap(),
            Cpt::from_rows(2, vec![2], &[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap(),
            alpha,
        )
        .unwrap();
        let b = ConvexCpd::new(
            Cpt::from_rows(2, vec![2], &[vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap(),
            Cpt::from_rows(2, vec![2], &[vec![0.6, 0.4], vec![0.1, 0.9]]).unwrap(),
            alpha,
        )
        .unwrap();
        Dnm::new(s, vec![a, b], vec![vec![0.5, 0.5]; 2], vec![vec![0.0, 1.0]; 2]).unwrap()
    }

    #[test]
    fn flattened_rows_put_contemporaneous_parents_first() {
        let cpd = two_var_dnm(0.25).cpd(1).flatten();
        assert_eq!(cpd.parent_cards(), &[2, 2]);
        // (A=1, B_prev=0): 0.75*[0.4,0.6] + 0.25*[0.6,0.4]
        let row = cpd.row_for(&[1, 0]);
        assert!((row[0] - 0.45).abs() < 1e-15);
    }

    #[test]
    fn zero_alpha_makes_lagged_parents_vacuous() {
        let cpt = two_var_dnm(0.0).cpd(1).flatten();
        for a in 0..2 {
            assert_eq!(cpt.row_for(&[a, 0]), cpt.row_for(&[a, 1]));
        }
    }

    #[test]
    fn unrolled_network_layout() {
        let dnm = two_var_dnm(0.5);
        let window = HistoryWindow::observed(vec![vec![1, 0]]);
        let u = unroll(&dnm, &window).unwrap();
        assert_eq!(u.network.len(), 4);
        assert!(validate_network(&u.network).is_empty());
        assert_eq!(u.evidence.as_slice(), &[Some(1), Some(0), None, None]);
        assert_eq!(u.network.node(u.leading(1)).parents, vec![2, 1]);
        assert_eq!(u.network.node(u.leading(1)).variable.name, "B@t+1");
        assert_eq!(u.roles[0], NodeRole::Boundary);
    }

    #[test]
    fn short_window_is_an_error() {
        let dnm = two_var_dnm(0.5);
        assert!(matches!(
            unroll(&dnm, &HistoryWindow::default()),
            Err(Error::WindowTooShort { needed: 1, got: 0 })
        ));
    }
}
