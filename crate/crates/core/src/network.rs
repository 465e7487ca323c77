//! Discrete belief networks.
//!
//! A [`BeliefNetwork`] is a DAG of discrete [`Variable`]s, each carrying a
//! conditional probability table ([`Cpt`]) over its parents. Networks are
//! immutable once built; [`validate_network`] reports every broken invariant
//! instead of stopping at the first one.
//!
//! CPT rows are indexed by parent configuration in mixed-radix order with the
//! first listed parent most significant, so for parents `(A, B)` with
//! cardinalities `(2, 3)` the rows run `(0,0), (0,1), (0,2), (1,0), ...`.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows of a valid CPT sum to one within this tolerance.
pub const ROW_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableKind {
    /// A continuous channel that has been binned into states.
    Discretized,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Variable {
    pub name: String,
    pub cardinality: usize,
    pub kind: VariableKind,
}

impl Variable {
    pub fn new(name: impl Into<String>, cardinality: usize, kind: VariableKind) -> Self {
        Self {
            name: name.into(),
            cardinality,
            kind,
        }
    }

    pub fn discretized(name: impl Into<String>, cardinality: usize) -> Self {
        Self::new(name, cardinality, VariableKind::Discretized)
    }

    pub fn categorical(name: impl Into<String>, cardinality: usize) -> Self {
        Self::new(name, cardinality, VariableKind::Categorical)
    }
}

/// Conditional probability table `Pr(child | parents)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    cardinality: usize,
    parent_cards: Vec<usize>,
    probs: Vec<f64>,
}

impl Cpt {
    /// Builds a table from row-major probabilities. Only the shape is
    /// checked here; value invariants are reported by [`validate_network`].
    pub fn new(cardinality: usize, parent_cards: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if cardinality == 0 {
            return Err(Error::InvalidArgument("CPT cardinality must be at least 1".into()));
        }
        let rows = config_count(&parent_cards);
        if probs.len() != rows * cardinality {
            return Err(Error::InvalidArgument(format!(
                "CPT has {} entries, expected {} rows x {} states",
                probs.len(),
                rows,
                cardinality
            )));
        }
        Ok(Self {
            cardinality,
            parent_cards,
            probs,
        })
    }

    pub fn from_rows(cardinality: usize, parent_cards: Vec<usize>, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.iter().any(|r| r.len() != cardinality) {
            return Err(Error::InvalidArgument(format!(
                "every CPT row must have {cardinality} entries"
            )));
        }
        Self::new(cardinality, parent_cards, rows.concat())
    }

    /// A parentless table holding a single distribution.
    pub fn prior(dist: Vec<f64>) -> Result<Self> {
        Self::new(dist.len(), Vec::new(), dist)
    }

    pub fn uniform(cardinality: usize, parent_cards: Vec<usize>) -> Self {
        let rows = config_count(&parent_cards);
        let p = 1.0 / cardinality as f64;
        Self {
            cardinality,
            parent_cards,
            probs: vec![p; rows * cardinality],
        }
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn parent_cards(&self) -> &[usize] {
        &self.parent_cards
    }

    pub fn row_count(&self) -> usize {
        self.probs.len() / self.cardinality
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.probs[index * self.cardinality..(index + 1) * self.cardinality]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.cardinality)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Mixed-radix row index of a parent configuration.
    pub fn row_index(&self, parent_states: &[usize]) -> usize {
        config_index(&self.parent_cards, parent_states)
    }

    pub fn row_for(&self, parent_states: &[usize]) -> &[f64] {
        self.row(self.row_index(parent_states))
    }

    pub fn prob(&self, parent_states: &[usize], state: usize) -> f64 {
        self.row_for(parent_states)[state]
    }

    /// Rescales rows whose sum drifts from one by at most `tolerance`;
    /// larger drift (or a negative entry) is an error naming the row. Rows
    /// already within [`ROW_TOLERANCE`] are left bit-for-bit untouched.
    pub fn renormalize(&mut self, tolerance: f64) -> Result<()> {
        let card = self.cardinality;
        for (j, row) in self.probs.chunks_mut(card).enumerate() {
            if let Some(&bad) = row.iter().find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0) {
                return Err(Error::InvalidNetwork(format!(
                    "row {j} has entry {bad} outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tolerance {
                return Err(Error::InvalidNetwork(format!(
                    "row {j} sums to {sum}, drift exceeds {tolerance}"
                )));
            }
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                row.iter_mut().for_each(|p| *p /= sum);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub variable: Variable,
    pub parents: Vec<usize>,
    pub cpt: Cpt,
}

impl Node {
    pub fn new(variable: Variable, parents: Vec<usize>, cpt: Cpt) -> Self {
        Self {
            variable,
            parents,
            cpt,
        }
    }

    /// A parentless node with the given prior.
    pub fn root(variable: Variable, prior: Vec<f64>) -> Result<Self> {
        Ok(Self::new(variable, Vec::new(), Cpt::prior(prior)?))
    }
}

/// A static discrete belief network. Arcs are stored as per-node parent lists.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BeliefNetwork {
    nodes: Vec<Node>,
}

impl BeliefNetwork {
    /// Wraps nodes without checking invariants; see [`validate_network`].
    pub fn new(nodes: Vec<Node>) -> Self {
        Self { nodes }
    }

    /// Builds a network and rejects it unless the validation report is empty.
    pub fn checked(nodes: Vec<Node>) -> Result<Self> {
        let bn = Self::new(nodes);
        let report = validate_network(&bn);
        if report.is_empty() {
            Ok(bn)
        } else {
            Err(Error::InvalidNetwork(report.to_string()))
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> &Node {
        &self.nodes[index]
    }

    pub fn cardinality(&self, index: usize) -> usize {
        self.nodes[index].variable.cardinality
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.variable.cardinality).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.variable.name == name)
    }

    /// All arcs as `(parent, child)` pairs.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .flat_map(|(child, n)| n.parents.iter().map(move |&p| (p, child)))
    }

    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.nodes.len()];
        for (p, c) in self.arcs() {
            if p < children.len() {
                children[p].push(c);
            }
        }
        children
    }

    /// Total number of joint configurations, as a float to avoid overflow.
    pub fn joint_state_count(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| n.variable.cardinality as f64)
            .product()
    }

    pub(crate) fn parent_states(&self, node: usize, states: &[usize], buf: &mut Vec<usize>) {
        buf.clear();
        buf.extend(self.nodes[node].parents.iter().map(|&p| states[p]));
    }
}

/// A possibly partial mapping from node to state index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Assignment(Vec<Option<usize>>);

impl Assignment {
    pub fn empty(len: usize) -> Self {
        Self(vec![None; len])
    }

    pub fn total(states: Vec<usize>) -> Self {
        Self(states.into_iter().map(Some).collect())
    }

    pub fn from_options(states: Vec<Option<usize>>) -> Self {
        Self(states)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, node: usize) -> Option<usize> {
        self.0.get(node).copied().flatten()
    }

    pub fn set(&mut self, node: usize, state: usize) {
        self.0[node] = Some(state);
    }

    pub fn with(mut self, node: usize, state: usize) -> Self {
        self.set(node, state);
        self
    }

    pub fn clear(&mut self, node: usize) {
        self.0[node] = None;
    }

    pub fn is_total(&self) -> bool {
        self.0.iter().all(Option::is_some)
    }

    pub fn observed_count(&self) -> usize {
        self.0.iter().filter(|s| s.is_some()).count()
    }

    pub fn as_slice(&self) -> &[Option<usize>] {
        &self.0
    }

    /// Checks length and state ranges against a network.
    pub fn check(&self, bn: &BeliefNetwork) -> Result<()> {
        if self.0.len() != bn.len() {
            return Err(Error::AssignmentLength {
                expected: bn.len(),
                got: self.0.len(),
            });
        }
        for (node, state) in self.0.iter().enumerate() {
            if let Some(s) = *state {
                let card = bn.cardinality(node);
                if s >= card {
                    return Err(Error::StateOutOfRange {
                        node: bn.node(node).variable.name.clone(),
                        state: s,
                        cardinality: card,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    DuplicateName,
    ZeroCardinality,
    UnknownParent(usize),
    DuplicateParent(usize),
    ParentMismatch { expected: Vec<usize>, found: Vec<usize> },
    CptCardinality { expected: usize, found: usize },
    EntryRange { row: usize, value: f64 },
    RowNormalization { row: usize, sum: f64 },
    Cycle(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub node: Option<String>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let node = self.node.as_deref().unwrap_or("<network>");
        match &self.kind {
            ViolationKind::DuplicateName => write!(f, "{node}: duplicate name"),
            ViolationKind::ZeroCardinality => write!(f, "{node}: cardinality must be at least 1"),
            ViolationKind::UnknownParent(p) => write!(f, "{node}: unknown parent index {p}"),
            ViolationKind::DuplicateParent(p) => write!(f, "{node}: parent {p} listed twice"),
            ViolationKind::ParentMismatch { expected, found } => write!(
                f,
                "{node}: CPT parent cardinalities {found:?} do not match parents {expected:?}"
            ),
            ViolationKind::CptCardinality { expected, found } => write!(
                f,
                "{node}: CPT has {found} states but the variable has {expected}"
            ),
            ViolationKind::EntryRange { row, value } => {
                write!(f, "{node}: entry {value} in row {row} outside [0, 1]")
            }
            ViolationKind::RowNormalization { row, sum } => {
                write!(f, "{node}: row normalization violated, row {row} sums to {sum}")
            }
            ViolationKind::Cycle(names) => write!(f, "cycle: {}", names.join(" -> ")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Violation> {
        self.violations.iter()
    }

    fn push(&mut self, node: Option<&str>, kind: ViolationKind) {
        self.violations.push(Violation {
            node: node.map(str::to_owned),
            kind,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every network invariant and returns one entry per violation.
pub fn validate_network(bn: &BeliefNetwork) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen = HashSet::new();
    let n = bn.len();

    for node in bn.nodes() {
        let name = node.variable.name.as_str();
        if !seen.insert(name) {
            report.push(Some(name), ViolationKind::DuplicateName);
        }
        if node.variable.cardinality == 0 {
            report.push(Some(name), ViolationKind::ZeroCardinality);
        }

        let mut parents_ok = true;
        let mut listed = HashSet::new();
        for &p in &node.parents {
            if p >= n {
                report.push(Some(name), ViolationKind::UnknownParent(p));
                parents_ok = false;
            } else if !listed.insert(p) {
                report.push(Some(name), ViolationKind::DuplicateParent(p));
            }
        }
        if parents_ok {
            let expected: Vec<usize> = node.parents.iter().map(|&p| bn.cardinality(p)).collect();
            if expected != node.cpt.parent_cards() {
                report.push(
                    Some(name),
                    ViolationKind::ParentMismatch {
                        expected,
                        found: node.cpt.parent_cards().to_vec(),
                    },
                );
            }
        }
        if node.cpt.cardinality() != node.variable.cardinality {
            report.push(
                Some(name),
                ViolationKind::CptCardinality {
                    expected: node.variable.cardinality,
                    found: node.cpt.cardinality(),
                },
            );
        }

        for (j, row) in node.cpt.rows().enumerate() {
            if let Some(&value) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                report.push(Some(name), ViolationKind::EntryRange { row: j, value });
            }
            let sum: f64 = row.iter().sum();
            if !((sum - 1.0).abs() <= ROW_TOLERANCE) {
                report.push(Some(name), ViolationKind::RowNormalization { row: j, sum });
            }
        }
    }

    if report.iter().all(|v| !matches!(v.kind, ViolationKind::UnknownParent(_))) {
        if let Err(Error::Cycle(names)) = topological_order(bn) {
            report.push(None, ViolationKind::Cycle(names));
        }
    }
    report
}

/// Kahn's algorithm, always releasing the lowest-indexed ready node first.
pub fn topological_order(bn: &BeliefNetwork) -> Result<Vec<usize>> {
    let n = bn.len();
    let children = bn.children();
    let mut indegree: Vec<usize> = bn.nodes().iter().map(|node| node.parents.len()).collect();
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n)
        .filter(|&i| indegree[i] == 0)
        .map(Reverse)
        .collect();
    let mut order = Vec::with_capacity(n);

    while let Some(Reverse(i)) = ready.pop() {
        order.push(i);
        for &c in &children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }

    if order.len() == n {
        return Ok(order);
    }

    // Every node left over still has a parent among the leftovers, so walking
    // parent links must revisit a node.
    let remaining: Vec<bool> = (0..n).map(|i| indegree[i] > 0).collect();
    let start = remaining.iter().position(|&r| r).unwrap_or(0);
    let mut path = vec![start];
    let mut on_path = vec![usize::MAX; n];
    on_path[start] = 0;
    let mut current = start;
    loop {
        let next = bn.nodes()[current]
            .parents
            .iter()
            .copied()
            .find(|&p| remaining[p])
            .unwrap_or(start);
        if on_path[next] != usize::MAX {
            let mut cycle: Vec<usize> = path[on_path[next]..].to_vec();
            cycle.reverse();
            cycle.push(cycle[0]);
            let names = cycle
                .into_iter()
                .map(|i| bn.node(i).variable.name.clone())
                .collect();
            return Err(Error::Cycle(names));
        }
        on_path[next] = path.len();
        path.push(next);
        current = next;
    }
}

/// Chain-rule product of CPT entries for a total assignment.
pub fn joint_probability(bn: &BeliefNetwork, x: &Assignment) -> Result<f64> {
    x.check(bn)?;
    let mut states = Vec::with_capacity(bn.len());
    for (node, s) in x.as_slice().iter().enumerate() {
        match s {
            Some(s) => states.push(*s),
            None => {
                return Err(Error::PartialAssignment(
                    bn.node(node).variable.name.clone(),
                ))
            }
        }
    }
    Ok(joint_of_states(bn, &states))
}

pub(crate) fn joint_of_states(bn: &BeliefNetwork, states: &[usize]) -> f64 {
    let mut buf = Vec::new();
    let mut p = 1.0;
    for (i, node) in bn.nodes().iter().enumerate() {
        bn.parent_states(i, states, &mut buf);
        p *= node.cpt.prob(&buf, states[i]);
        if p == 0.0 {
            break;
        }
    }
    p
}

pub(crate) fn config_count(cards: &[usize]) -> usize {
    cards.iter().product()
}

pub(crate) fn config_index(cards: &[usize], states: &[usize]) -> usize {
    debug_assert_eq!(cards.len(), states.len());
    states
        .iter()
        .zip(cards)
        .fold(0, |acc, (&s, &c)| acc * c + s)
}

/// Decodes a mixed-radix index into per-digit states, first digit most significant.
pub(crate) fn config_states(cards: &[usize], mut index: usize, out: &mut [usize]) {
    for (slot, &c) in out.iter_mut().zip(cards).rev() {
        *slot = index % c;
        index /= c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node() -> BeliefNetwork {
        BeliefNetwork::new(vec![
            Node::root(Variable::discretized("A", 2), vec![0.7, 0.3]).unwrap(),
            Node::new(
                Variable::discretized("B", 2),
                vec![0],
                Cpt::from_rows(2, vec![2], &[vec![0.8, 0.2], vec![0.1, 0.9]]).unwrap(),
            ),
        ])
    }

    fn named(name: &str, parents: Vec<usize>) -> Node {
        let cards = vec![2; parents.len()];
        Node::new(Variable::discretized(name, 2), parents, Cpt::uniform(2, cards))
    }

    #[test]
    fn acyclic_normalized_network_validates() {
        assert!(validate_network(&two_node()).is_empty());
    }

    #[test]
    fn two_cycle_is_reported() {
        let bn = BeliefNetwork::new(vec![named("A", vec![1]), named("B", vec![0])]);
        let report = validate_network(&bn);
        assert_eq!(report.len(), 1);
        assert!(report.to_string().contains("cycle"));
    }

    #[test]
    fn bad_row_sum_names_the_node() {
        let bn = BeliefNetwork::new(vec![Node::root(Variable::discretized("A", 2), vec![0.5, 0.4]).unwrap()]);
        let report = validate_network(&bn);
        assert_eq!(report.len(), 1);
        assert_eq!(report.violations[0].node.as_deref(), Some("A"));
        assert!(report.to_string().contains("row normalization"));
    }

    #[test]
    fn parent_mismatch_and_duplicate_names() {
        let mut b = named("A", vec![0]);
        b.cpt = Cpt::uniform(2, vec![3]);
        let bn = BeliefNetwork::new(vec![named("A", vec![]), b]);
        let kinds: Vec<_> = validate_network(&bn).violations.into_iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::DuplicateName));
        assert!(kinds.iter().any(|k| matches!(k, ViolationKind::ParentMismatch { .. })));
    }

    #[test]
    fn topological_order_chain_and_ties() {
        let chain = BeliefNetwork::new(vec![named("C", vec![1]), named("B", vec![2]), named("A", vec![])]);
        assert_eq!(topological_order(&chain).unwrap(), vec![2, 1, 0]);

        let isolated = BeliefNetwork::new(vec![named("X", vec![]), named("Y", vec![])]);
        assert_eq!(topological_order(&isolated).unwrap(), vec![0, 1]);
    }

    #[test]
    fn topological_order_reports_cycle() {
        let bn = BeliefNetwork::new(vec![named("A", vec![1]), named("B", vec![0]), named("C", vec![0])]);
        match topological_order(&bn) {
            Err(Error::Cycle(names)) => {
                assert_eq!(names.first(), names.last());
                assert_eq!(names.len(), 3);
            }
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn joint_probability_cases() {
        let bn = BeliefNetwork::new(vec![
            Node::root(Variable::discretized("A", 2), vec![0.7, 0.3]).unwrap(),
            Node::new(
                Variable::discretized("B", 2),
                vec![0],
                Cpt::from_rows(2, vec![2], &[vec![1.0, 0.0], vec![0.1, 0.9]]).unwrap(),
            ),
        ]);
        let p = joint_probability(&bn, &Assignment::total(vec![1, 1])).unwrap();
        assert!((p - 0.27).abs() < 1e-15);
        assert_eq!(joint_probability(&bn, &Assignment::total(vec![0, 1])).unwrap(), 0.0);
        assert_eq!(
            joint_probability(&BeliefNetwork::default(), &Assignment::total(vec![])).unwrap(),
            1.0
        );
        assert!(matches!(
            joint_probability(&bn, &Assignment::empty(2).with(0, 1)),
            Err(Error::PartialAssignment(_))
        ));
    }

    #[test]
    fn mixed_radix_first_parent_most_significant() {
        let cpt = Cpt::uniform(2, vec![2, 3]);
        assert_eq!(cpt.row_index(&[0, 2]), 2);
        assert_eq!(cpt.row_index(&[1, 0]), 3);
        let mut out = [0; 2];
        config_states(&[2, 3], 5, &mut out);
        assert_eq!(out, [1, 2]);
    }

    #[test]
    fn renormalize_accepts_small_drift_only() {
        let mut ok = Cpt::prior(vec![0.5, 0.5 + 5e-7]).unwrap();
        ok.renormalize(1e-6).unwrap();
        assert!((ok.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let mut bad = Cpt::prior(vec![0.4, 0.4]).unwrap();
        assert!(bad.renormalize(1e-6).is_err());
    }
}
