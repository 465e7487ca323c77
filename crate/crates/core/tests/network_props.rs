mod common;

use common::*;
use dnm::*;
use proptest::prelude::*;
use rand::Rng;

fn all_assignments(cards: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &c in cards {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..c).map(move |s| {
                    let mut next = prefix.clone();
                    next.push(s);
                    next
                })
            })
            .collect();
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn joint_sums_to_one(seed in any::<u64>()) {
        let bn = random_network(&mut rng(seed), 5, 3, true);
        let total: f64 = all_assignments(&bn.cardinalities())
            .into_iter()
            .map(|x| joint_probability(&bn, &Assignment::total(x)).unwrap())
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_matches_brute_force(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let bn = random_network(&mut rng, 6, 4, false);
        let mut e = Assignment::empty(bn.len());
        for node in 0..bn.len() {
            if rng.random::<f64>() < 0.4 {
                e.set(node, rng.random_range(0..bn.cardinality(node)));
            }
        }
        let a = exact_posterior(&bn, &e).unwrap();
        let b = brute_force_posterior(&bn, &e).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-9);
    }

    #[test]
    fn topological_order_puts_parents_first(seed in any::<u64>()) {
        let bn = random_network(&mut rng(seed), 6, 3, false);
        let order = topological_order(&bn).unwrap();
        let mut pos = vec![0; bn.len()];
        for (i, &n) in order.iter().enumerate() {
            pos[n] = i;
        }
        for (p, c) in bn.arcs() {
            prop_assert!(pos[p] < pos[c]);
        }
    }

    #[test]
    fn random_networks_validate(seed in any::<u64>()) {
        let bn = random_network(&mut rng(seed), 6, 4, true);
        prop_assert!(validate_network(&bn).is_empty());
    }
}

#[test]
fn likelihood_weighting_converges_to_exact() {
    let mut rng = rng(5);
    for _ in 0..10 {
        let bn = random_network(&mut rng, 5, 3, false);
        let e = Assignment::empty(bn.len()).with(0, 0);
        let exact = exact_posterior(&bn, &e).unwrap();
        let approx = approximate_posterior(&bn, &e, 40_000, 99).unwrap();
        assert!(exact.max_abs_diff(&approx) < 0.03, "{}", exact.max_abs_diff(&approx));
    }
}

#[test]
fn same_seed_same_answer() {
    let bn = random_network(&mut rng(8), 5, 3, false);
    let e = Assignment::empty(bn.len());
    let a = approximate_posterior(&bn, &e, 500, 1).unwrap();
    let b = approximate_posterior(&bn, &e, 500, 1).unwrap();
    assert_eq!(a, b);
}

#[test]
fn cycles_and_bad_rows_are_reported() {
    let a = Variable::discretized("A", 2);
    let b = Variable::discretized("B", 2);
    let cyclic = BeliefNetwork::new(vec![
        Node::new(a.clone(), vec![1], Cpt::uniform(2, vec![2])),
        Node::new(b.clone(), vec![0], Cpt::uniform(2, vec![2])),
    ]);
    let report = validate_network(&cyclic);
    assert!(report.iter().any(|v| matches!(v.kind, ViolationKind::Cycle(_))));
    assert!(matches!(topological_order(&cyclic), Err(Error::Cycle(_))));

    let bad = BeliefNetwork::new(vec![Node::new(a, vec![], Cpt::prior(vec![0.3, 0.3]).unwrap())]);
    let report = validate_network(&bad);
    assert!(report.iter().any(|v| matches!(v.kind, ViolationKind::RowNormalization { .. })));
    assert!(report.to_string().contains("row normalization violated"));
}
