mod common;

use common::*;
use dnm::*;

const P: [[f64; 2]; 2] = [[0.9, 0.1], [0.2, 0.8]];

fn p() -> Vec<Vec<f64>> {
    P.iter().map(|r| r.to_vec()).collect()
}

#[test]
fn two_state_chain_ten_steps() {
    let dnm = markov_dnm(&p(), vec![0.0, 1.0]);
    let fc = k_step_forecast(&dnm, &HistoryWindow::observed(vec![vec![0]]), 10, InferenceMethod::Exact).unwrap();
    assert!((fc.steps[1].distributions[0][0] - 0.83).abs() < 1e-12);
    for (h, step) in fc.steps.iter().enumerate() {
        let power = matrix_power(&p(), h + 1);
        assert!((step.distributions[0][0] - power[0][0]).abs() < 1e-12);
        assert!((step.expected[0] - power[0][1]).abs() < 1e-12);
    }
    assert_eq!(fc.distinct_structures, 1);
}

#[test]
fn one_step_on_a_chain_is_a_transition_row() {
    let dnm = markov_dnm(&p(), vec![0.0, 1.0]);
    let f = one_step_forecast(&dnm, &HistoryWindow::observed(vec![vec![1]]), InferenceMethod::Exact).unwrap();
    assert_eq!(f.distributions[0], vec![0.2, 0.8]);
    assert_eq!(f.mode(0), 1);
}

#[test]
fn order_three_counts_min_l_k() {
    let structure = DnmStructure::new(
        vec![Variable::discretized("X", 2)],
        3,
        vec![vec![]],
        vec![vec![LagRef::new(0, 1), LagRef::new(0, 3)]],
    )
    .unwrap();
    let dnm = dnm_with_random_tables(&mut rng(3), structure, 0.6);
    let window = HistoryWindow::observed(vec![vec![0], vec![1], vec![1]]);
    let counts: Vec<usize> = (1..=6)
        .map(|k| k_step_forecast(&dnm, &window, k, InferenceMethod::Exact).unwrap().distinct_structures)
        .collect();
    assert_eq!(counts, vec![1, 2, 3, 3, 3, 3]);
}

#[test]
fn forecast_distributions_are_normalized() {
    let mut rng = rng(41);
    for _ in 0..30 {
        let dnm = random_dnm(&mut rng, 3, 3, 2);
        let l = dnm.window_len();
        let rows = sample_series(&dnm, l + 2, &mut rng);
        let window = HistoryWindow::observed(rows[rows.len() - l..].to_vec());
        let fc = k_step_forecast(&dnm, &window, 5, InferenceMethod::Exact).unwrap();
        assert!(fc.distinct_structures <= l.clamp(1, 5));
        for step in &fc.steps {
            for d in &step.distributions {
                assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn missing_history_is_marginalized() {
    // With the history value missing, step 1 of a chain starts from the boundary prior.
    let dnm = markov_dnm(&p(), vec![0.0, 1.0]);
    let fc = k_step_forecast(&dnm, &HistoryWindow::new(vec![vec![None]]), 3, InferenceMethod::Exact).unwrap();
    let prior = [0.5, 0.5];
    let mut dist = prior.to_vec();
    for step in &fc.steps {
        dist = (0..2).map(|j| (0..2).map(|i| dist[i] * P[i][j]).sum()).collect();
        assert!((step.distributions[0][0] - dist[0]).abs() < 1e-12);
    }
}

#[test]
fn missing_lag_two_value_is_carried_forward() {
    // X_t depends on X_{t-2} only; with X_{t-1} missing, step 2 needs its posterior.
    let structure = DnmStructure::new(vec![Variable::discretized("X", 2)], 2, vec![vec![]], vec![vec![LagRef::new(0, 2)]]).unwrap();
    let cpd = ConvexCpd::new(Cpt::uniform(2, vec![]), Cpt::from_rows(2, vec![2], &p()).unwrap(), 1.0).unwrap();
    let dnm = Dnm::new(structure, vec![cpd], vec![vec![0.3, 0.7]], vec![vec![0.0, 1.0]]).unwrap();
    let window = HistoryWindow::new(vec![vec![Some(0)], vec![None]]);
    let fc = k_step_forecast(&dnm, &window, 2, InferenceMethod::Exact).unwrap();
    assert!((fc.steps[0].distributions[0][0] - 0.9).abs() < 1e-12);
    // step 2 predicts from the missing X_{t-1}, whose prior is the boundary marginal
    let expect0 = 0.3 * 0.9 + 0.7 * 0.2;
    assert!((fc.steps[1].distributions[0][0] - expect0).abs() < 1e-12);
}

#[test]
fn approximate_forecasts_track_exact() {
    let mut rng = rng(43);
    let dnm = random_dnm(&mut rng, 3, 3, 1);
    let l = dnm.window_len();
    let rows = sample_series(&dnm, l + 1, &mut rng);
    let window = HistoryWindow::observed(rows[rows.len() - l..].to_vec());
    let exact = k_step_forecast(&dnm, &window, 3, InferenceMethod::Exact).unwrap();
    let approx = k_step_forecast(&dnm, &window, 3, InferenceMethod::Approximate { samples: 50_000, seed: 1 }).unwrap();
    for (a, b) in exact.steps.iter().zip(&approx.steps) {
        for (x, y) in a.distributions.iter().flatten().zip(b.distributions.iter().flatten()) {
            assert!((x - y).abs() < 0.03);
        }
    }
}

#[test]
fn unrolled_network_has_window_plus_one_slices() {
    let dnm = random_dnm(&mut rng(47), 3, 2, 2);
    let l = dnm.window_len();
    let window = HistoryWindow::observed(vec![vec![0; dnm.n_vars()]; l]);
    let u = unroll(&dnm, &window).unwrap();
    assert_eq!(u.network.len(), (l + 1) * dnm.n_vars());
    assert!(validate_network(&u.network).is_empty());
    assert_eq!(u.evidence.observed_count(), l * dnm.n_vars());
}
