//! Generators shared by the integration tests.
#![allow(dead_code)]

use dnm::{BeliefNetwork, ConvexCpd, Cpt, DiscreteSeries, Dnm, DnmStructure, LagRef, Node, Variable};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random distribution; with `zeros` some entries may be exactly zero.
pub fn random_dist(rng: &mut impl Rng, card: usize, zeros: bool) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..card)
            .map(|_| if zeros && rng.random::<f64>() < 0.15 { 0.0 } else { rng.random::<f64>() + 0.01 })
            .collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            return raw.iter().map(|x| x / total).collect();
        }
    }
}

pub fn random_cpt(rng: &mut impl Rng, card: usize, parent_cards: Vec<usize>, zeros: bool) -> Cpt {
    let rows: usize = parent_cards.iter().product();
    let probs: Vec<f64> = (0..rows).flat_map(|_| random_dist(rng, card, zeros)).collect();
    Cpt::new(card, parent_cards, probs).unwrap()
}

/// Random DAG with node indices shuffled so index order is not topological.
pub fn random_network(rng: &mut impl Rng, max_nodes: usize, max_card: usize, zeros: bool) -> BeliefNetwork {
    let n = rng.random_range(1..=max_nodes);
    let cards: Vec<usize> = (0..n).map(|_| rng.random_range(1..=max_card)).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    // perm[i] = position of generation-order node i
    let mut nodes: Vec<Option<Node>> = vec![None; n];
    for i in 0..n {
        let parents: Vec<usize> = (0..i).filter(|_| rng.random::<f64>() < 0.45).take(3).collect();
        let pcards = parents.iter().map(|&p| cards[p]).collect();
        let cpt = random_cpt(rng, cards[i], pcards, zeros);
        let var = Variable::discretized(format!("N{}", perm[i]), cards[i]);
        nodes[perm[i]] = Some(Node::new(var, parents.iter().map(|&p| perm[p]).collect(), cpt));
    }
    BeliefNetwork::new(nodes.into_iter().map(Option::unwrap).collect())
}

/// Random DNM with at least one lagged parent somewhere.
pub fn random_dnm(rng: &mut impl Rng, max_vars: usize, max_card: usize, order: usize) -> Dnm {
    loop {
        let n = rng.random_range(1..=max_vars);
        let variables: Vec<Variable> = (0..n)
            .map(|i| Variable::discretized(format!("V{i}"), rng.random_range(2..=max_card)))
            .collect();
        let contemporaneous: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..i).filter(|_| rng.random::<f64>() < 0.4).collect())
            .collect();
        let lagged: Vec<Vec<LagRef>> = (0..n)
            .map(|_| {
                let mut refs = Vec::new();
                for lag in 1..=order {
                    for v in 0..n {
                        if rng.random::<f64>() < 0.35 && refs.len() < 2 {
                            refs.push(LagRef::new(v, lag));
                        }
                    }
                }
                refs
            })
            .collect();
        if lagged.iter().all(Vec::is_empty) {
            continue;
        }
        let structure = DnmStructure::new(variables.clone(), order, contemporaneous, lagged).unwrap();
        return dnm_with_random_tables(rng, structure, 0.5);
    }
}

pub fn dnm_with_random_tables(rng: &mut impl Rng, structure: DnmStructure, alpha: f64) -> Dnm {
    let n = structure.n_vars();
    let cpds = (0..n)
        .map(|i| {
            let card = structure.variables()[i].cardinality;
            ConvexCpd::new(
                random_cpt(rng, card, structure.contemporaneous_cards(i), false),
                random_cpt(rng, card, structure.lagged_cards(i), false),
                alpha,
            )
            .unwrap()
        })
        .collect();
    let marginals = structure
        .variables()
        .iter()
        .map(|v| random_dist(rng, v.cardinality, false))
        .collect();
    let values = structure
        .variables()
        .iter()
        .map(|v| {
            let mut vals: Vec<f64> = (0..v.cardinality).map(|_| rng.random_range(-5.0..5.0)).collect();
            vals.sort_by(f64::total_cmp);
            vals
        })
        .collect();
    Dnm::new(structure, cpds, marginals, values).unwrap()
}

pub fn sample_from(rng: &mut impl Rng, dist: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    dist.len() - 1
}

/// Forward-samples `len` slices. The first `l` slices come from the
/// marginals; later ones from the convex CPDs.
pub fn sample_series(dnm: &Dnm, len: usize, rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let s = dnm.structure();
    let l = s.max_lag();
    let topo = s.contemporaneous_order().unwrap();
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(len);
    for t in 0..len {
        let mut row = vec![0; s.n_vars()];
        for &v in &topo {
            row[v] = if t < l {
                sample_from(rng, dnm.marginal(v))
            } else {
                let c: Vec<usize> = s.contemporaneous(v).iter().map(|&p| row[p]).collect();
                let nc: Vec<usize> = s.lagged(v).iter().map(|r| rows[t - r.lag][r.var]).collect();
                sample_from(rng, &dnm.cpd(v).eval(&c, &nc))
            };
        }
        rows.push(row);
    }
    rows
}

pub fn to_series(variables: &[Variable], rows: &[Vec<usize>]) -> DiscreteSeries {
    DiscreteSeries::new(
        variables.to_vec(),
        rows.iter().map(|r| r.iter().map(|&s| Some(s)).collect()).collect(),
    )
    .unwrap()
}

/// Single-variable model whose only parent is itself one step back.
pub fn markov_dnm(transition: &[Vec<f64>], values: Vec<f64>) -> Dnm {
    let r = transition.len();
    let structure = DnmStructure::new(
        vec![Variable::discretized("X", r)],
        1,
        vec![vec![]],
        vec![vec![LagRef::new(0, 1)]],
    )
    .unwrap();
    let cpd = ConvexCpd::new(
        Cpt::uniform(r, vec![]),
        Cpt::from_rows(r, vec![r], transition).unwrap(),
        1.0,
    )
    .unwrap();
    Dnm::new(structure, vec![cpd], vec![vec![1.0 / r as f64; r]], vec![values]).unwrap()
}

/// Every variable copies its own previous state.
pub fn persistence_dnm(cards: &[usize]) -> Dnm {
    let n = cards.len();
    let variables: Vec<Variable> = cards
        .iter()
        .enumerate()
        .map(|(i, &c)| Variable::discretized(format!("P{i}"), c))
        .collect();
    let structure = DnmStructure::new(
        variables,
        1,
        vec![vec![]; n],
        (0..n).map(|i| vec![LagRef::new(i, 1)]).collect(),
    )
    .unwrap();
    let cpds = cards
        .iter()
        .map(|&c| {
            let identity: Vec<Vec<f64>> = (0..c).map(|i| (0..c).map(|j| f64::from(u8::from(i == j))).collect()).collect();
            ConvexCpd::new(Cpt::uniform(c, vec![]), Cpt::from_rows(c, vec![c], &identity).unwrap(), 1.0).unwrap()
        })
        .collect();
    let marginals = cards.iter().map(|&c| vec![1.0 / c as f64; c]).collect();
    let values = cards.iter().map(|&c| (1..=c).map(|s| s as f64 * 10.0).collect()).collect();
    Dnm::new(structure, cpds, marginals, values).unwrap()
}

/// `k`-th power of a row-stochastic matrix.
pub fn matrix_power(m: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let r = m.len();
    let mut out: Vec<Vec<f64>> = (0..r).map(|i| (0..r).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _ in 0..k {
        out = (0..r)
            .map(|i| (0..r).map(|j| (0..r).map(|x| out[i][x] * m[x][j]).sum()).collect())
            .collect();
    }
    out
}

/// Hidden state of the apnea-style generator at one time step.
#[derive(Debug, Clone, Copy)]
pub struct ApneaLatent {
    pub apnea: bool,
    pub stage: usize,
    pub hr_level: f64,
    pub sao2_level: f64,
    pub phase: f64,
}

/// A four-channel physiological-style series: chest volume `CV` oscillates
/// quickly and collapses during apnea episodes, heart rate `HR` and oxygen
/// saturation `SaO2` drift slowly with the episodes, and `REM` is a
/// categorical sleep stage.
pub struct ApneaSeries {
    pub hr: Vec<f64>,
    pub cv: Vec<f64>,
    pub sao2: Vec<f64>,
    pub rem: Vec<String>,
    /// Generator's own one-step conditional mean of each continuous channel,
    /// `expected[t]` predicting time `t`.
    pub expected_hr: Vec<f64>,
    pub expected_sao2: Vec<f64>,
    pub expected_cv: Vec<f64>,
}

pub const STAGES: [&str; 3] = ["N", "R", "W"];

pub fn apnea_series(len: usize, seed: u64) -> ApneaSeries {
    let mut rng = rng(seed);
    let normal = |rng: &mut ChaCha8Rng| -> f64 {
        // Box–Muller
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let mut s = ApneaLatent {
        apnea: false,
        stage: 0,
        hr_level: 70.0,
        sao2_level: 96.0,
        phase: 0.0,
    };
    let mut out = ApneaSeries {
        hr: Vec::with_capacity(len),
        cv: Vec::with_capacity(len),
        sao2: Vec::with_capacity(len),
        rem: Vec::with_capacity(len),
        expected_hr: Vec::with_capacity(len),
        expected_sao2: Vec::with_capacity(len),
        expected_cv: Vec::with_capacity(len),
    };
    let omega = 2.0 * std::f64::consts::PI / 5.0;
    for _ in 0..len {
        // regime switches
        let leave = if s.apnea { 1.0 / 40.0 } else { 1.0 / 120.0 };
        if rng.random::<f64>() < leave {
            s.apnea = !s.apnea;
        }
        if rng.random::<f64>() < 1.0 / 300.0 {
            s.stage = rng.random_range(0..3);
        }
        let hr_target = if s.apnea { 78.0 } else { 68.0 } + if s.stage == 1 { 3.0 } else { 0.0 };
        let sao2_target = if s.apnea { 88.0 } else { 96.0 };
        let hr_mean = s.hr_level + 0.05 * (hr_target - s.hr_level);
        let sao2_mean = s.sao2_level + 0.04 * (sao2_target - s.sao2_level);
        s.phase += omega;
        let amplitude = if s.apnea { 60.0 } else { 450.0 };
        let cv_mean = 1000.0 + amplitude * s.phase.sin();

        out.expected_hr.push(hr_mean);
        out.expected_sao2.push(sao2_mean);
        out.expected_cv.push(cv_mean);
        s.hr_level = hr_mean + 0.6 * normal(&mut rng);
        s.sao2_level = sao2_mean + 0.25 * normal(&mut rng);
        out.hr.push(s.hr_level);
        out.sao2.push(s.sao2_level);
        out.cv.push(cv_mean + 80.0 * normal(&mut rng));
        out.rem.push(STAGES[s.stage].to_owned());
    }
    out
}

impl ApneaSeries {
    pub fn to_csv(&self) -> String {
        let mut text = String::from("t,HR,CV,SaO2,REM\n");
        for t in 0..self.hr.len() {
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                t, self.hr[t], self.cv[t], self.sao2[t], self.rem[t]
            ));
        }
        text
    }
}
