//! Exact solvers against brute force, closed forms and limiting cases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sastep::env::placement::Next;
use sastep::env::{
    exec_episode, placement_residual, ActionPolicyState, ExecModel, ExecSession, LobAction, LobState, PlacementModel,
    PolicyMode,
};
use sastep::reference::{
    execution_bellman_residual, placement_bellman_residual, solve_execution_reference, solve_placement_reference,
    StoppingProblem, Successor,
};
use sastep::{Algorithm, BaseSchedule, HlScheme, IterateTable, Learner, StateIndex};

fn random_problem(rng: &mut ChaCha8Rng, n: usize, horizon: usize) -> StoppingProblem {
    let kernel = (0..n)
        .map(|_| {
            let mut row: Vec<(f64, Successor)> = (0..n).map(|j| (rng.random::<f64>(), Successor::State(j))).collect();
            row.push((rng.random::<f64>(), Successor::Absorb(rng.random_range(0.0..2.0))));
            let total: f64 = row.iter().map(|(p, _)| p).sum();
            row.iter_mut().for_each(|(p, _)| *p /= total);
            // renormalise the last entry so the row sums to one exactly enough
            let head: f64 = row[..n].iter().map(|(p, _)| p).sum();
            row[n].0 = 1.0 - head;
            row
        })
        .collect();
    StoppingProblem {
        horizon,
        stop_cost: (0..n).map(|_| rng.random_range(0.0..2.0)).collect(),
        wait_cost: rng.random_range(0.0..0.3),
        kernel,
    }
}

/// Value at `t = 0` of the deterministic Markov policy encoded by `bits`
/// (bit `t·n + s` set means wait).
fn policy_value(p: &StoppingProblem, bits: u32) -> Vec<f64> {
    let n = p.stop_cost.len();
    let mut v = p.stop_cost.clone();
    for t in (0..p.horizon).rev() {
        v = (0..n)
            .map(|s| {
                if bits >> (t * n + s) & 1 == 0 {
                    p.stop_cost[s]
                } else {
                    p.wait_cost
                        + p.kernel[s]
                            .iter()
                            .map(|(q, succ)| {
                                q * match *succ {
                                    Successor::State(j) => v[j],
                                    Successor::Absorb(c) => c,
                                }
                            })
                            .sum::<f64>()
                }
            })
            .collect();
    }
    v
}

#[test]
fn stopping_matches_policy_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (n, h) = (4, 3);
    for _ in 0..5 {
        let p = random_problem(&mut rng, n, h);
        let sol = p.solve().unwrap();
        let mut best = vec![f64::INFINITY; n];
        for bits in 0..1u32 << (n * h) {
            for (b, v) in best.iter_mut().zip(policy_value(&p, bits)) {
                *b = b.min(v);
            }
        }
        let optimal_bits = sol
            .control
            .iter()
            .enumerate()
            .fold(0u32, |acc, (k, &c)| acc | (c as u32) << k);
        let attained = policy_value(&p, optimal_bits);
        for s in 0..n {
            assert!(
                (sol.value[s] - best[s]).abs() < 1e-12,
                "state {s}: {} vs {}",
                sol.value[s],
                best[s]
            );
            assert!((attained[s] - best[s]).abs() < 1e-12);
        }
    }
}

#[test]
fn stopping_rejects_bad_kernels() {
    let p = StoppingProblem {
        horizon: 1,
        stop_cost: vec![1.0],
        wait_cost: 0.0,
        kernel: vec![vec![(0.5, Successor::State(0))]],
    };
    assert!(p.solve().is_err());
    let p = StoppingProblem {
        kernel: vec![vec![(1.0, Successor::State(3))]],
        ..p
    };
    assert!(p.solve().is_err());
}

#[test]
fn free_spread_means_always_cross() {
    let model = PlacementModel {
        spread_psi: 0.0,
        ..PlacementModel::default()
    };
    let r = solve_placement_reference(&model).unwrap();
    assert!(r.control.iter().all(|c| *c == Some(0)));
    assert!(placement_bellman_residual(&model, &r).unwrap() <= 1e-10);
}

#[test]
fn free_waiting_stays_while_a_fill_is_possible() {
    let model = PlacementModel {
        wait_cost_c: 0.0,
        p_opp_depletion: 0.0,
        ..PlacementModel::default()
    };
    let r = solve_placement_reference(&model).unwrap();
    for id in 0..model.n_states() {
        let (t, s) = model.decode(StateIndex(id));
        assert!(r.values[2 * id + 1] <= model.spread_psi + 1e-12);
        // a fill needs q_before + 1 market orders before the horizon
        let reachable = s.q_before < model.horizon - t;
        assert_eq!(r.control[id], Some(usize::from(reachable)), "t={t} {s:?}");
    }
    assert!(placement_bellman_residual(&model, &r).unwrap() <= 1e-10);
}

#[test]
fn default_references_satisfy_their_bellman_equations() {
    let model = PlacementModel::default();
    let r = solve_placement_reference(&model).unwrap();
    assert!(placement_bellman_residual(&model, &r).unwrap() <= 1e-10);
    let mut perturbed = r.clone();
    perturbed.values[3] += 0.1;
    assert!(placement_bellman_residual(&model, &perturbed).unwrap() >= 0.1 - 1e-12);

    let model = ExecModel::default();
    let r = solve_execution_reference(&model).unwrap();
    assert!(execution_bellman_residual(&model, &r).unwrap() <= 1e-10);
}

#[test]
fn placement_residual_matches_hand_computation() {
    let model = PlacementModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let q = IterateTable::from_values((0..model.n_q()).map(|_| rng.random_range(0.0..2.0)).collect());
    let s = LobState {
        q_before: 1,
        q_after: 2,
        q_opp: 2,
    };
    let n = LobState { q_before: 0, ..s };
    let z = model.encode(0, &s).unwrap().0;
    let zn = model.encode(1, &n).unwrap().0;
    let c = model.wait_cost_c;

    let got = placement_residual(&q, &model, 0, &s, LobAction::Stay, Next::Continue(n), c).unwrap();
    let v = q.values();
    let expected = v[2 * z + 1] - (c + v[2 * zn].min(v[2 * zn + 1]));
    assert!((got - expected).abs() < 1e-15);

    let got = placement_residual(&q, &model, 0, &s, LobAction::Cross, Next::Done(model.spread_psi), 0.0).unwrap();
    assert!((got - (v[2 * z] - model.spread_psi)).abs() < 1e-15);

    let got = placement_residual(&q, &model, 0, &s, LobAction::Stay, Next::Done(0.0), c).unwrap();
    assert!((got - (v[2 * z + 1] - c)).abs() < 1e-15);

    // the last decision continues into the forced cross
    let t = model.horizon - 1;
    let zl = model.encode(t, &s).unwrap().0;
    let got = placement_residual(&q, &model, t, &s, LobAction::Stay, Next::Continue(n), c).unwrap();
    assert!((got - (v[2 * zl + 1] - c - model.spread_psi)).abs() < 1e-15);
}

#[test]
fn execution_without_drift_or_penalties_is_flat() {
    let model = ExecModel {
        alpha: 0.0,
        phi: 0.0,
        a_terminal: 0.0,
        ..ExecModel::default()
    };
    let r = solve_execution_reference(&model).unwrap();
    assert!(r.values.iter().all(|v| v.abs() < 1e-15));
    for n_t in 0..model.k_t {
        for i in 0..model.n_inventory() {
            assert_eq!(r.control[model.index(n_t, i).0], Some(i));
        }
    }
    for i in 0..model.n_inventory() {
        assert_eq!(r.control[model.index(model.k_t, i).0], None);
    }
}

#[test]
fn one_step_execution_matches_the_closed_form() {
    // k_q = 1600 on [−2, 2] puts both q = 1 and the optimum 1.0025 on the grid
    let model = ExecModel {
        alpha: 0.1,
        sigma: 1.0,
        kappa: 0.1,
        phi: 0.0,
        a_terminal: 0.0,
        horizon: 0.1,
        k_t: 1,
        k_q: 1600,
        q_bar: 2.0,
    };
    let r = solve_execution_reference(&model).unwrap();
    let z = model.index(0, 1200);
    assert!((model.inventory(1200) - 1.0).abs() < 1e-15);
    assert!((r.values[z.0] - 0.01000625).abs() < 1e-12, "{}", r.values[z.0]);
    assert_eq!(r.control[z.0], Some(1201));

    let coarse = ExecModel { k_q: 4, ..model };
    let rc = solve_execution_reference(&coarse).unwrap();
    let zc = coarse.index(0, 3);
    assert!(rc.values[zc.0] <= r.values[z.0] + 1e-15);
}

#[test]
fn episodes_cover_every_starting_inventory() {
    let model = ExecModel::default();
    let k = model.n_inventory();
    // P(miss) ≤ k·(1 − 1/k)^100
    let bound = k as f64 * (1.0 - 1.0 / k as f64).powi(100);
    assert!(bound < 1e-3);
    let seeds = 200;
    let mut covered = 0;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let schedule = BaseSchedule::constant(model.n_states(), 0.1).unwrap();
        let mut learner = Learner::new(Algorithm::Rl, model.initial_table(), schedule, HlScheme::Additive, 1).unwrap();
        let policy = ActionPolicyState::new(model.n_states(), PolicyMode::ExploreSoftmax, 5.0, 1.0, 0.1).unwrap();
        let mut session = ExecSession::new(&model, policy);
        for _ in 0..100 {
            let trace = exec_episode(&model, &mut learner, &mut session, u64::MAX, &mut rng).unwrap();
            assert_eq!(trace.steps, model.k_t as u64);
        }
        let table = learner.table();
        if (0..k).all(|i| table.visits(model.index(0, i)) > 0) {
            covered += 1;
        }
        assert!(
            table.visits(model.index(model.k_t, 0)) == 0,
            "terminal states are never learned"
        );
    }
    assert!(covered as f64 / seeds as f64 > 0.99, "{covered}/{seeds}");
}

#[test]
fn sessions_stay_on_the_inventory_grid() {
    let model = ExecModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let schedule = BaseSchedule::constant(model.n_states(), 0.1).unwrap();
    let mut learner = Learner::new(Algorithm::Pass, model.initial_table(), schedule, HlScheme::Additive, 1).unwrap();
    let policy = ActionPolicyState::new(model.n_states(), PolicyMode::EpsilonUniform, 5.0, 1.0, 0.5).unwrap();
    let mut session = ExecSession::new(&model, policy);
    for _ in 0..5000 {
        session.step(&model, &mut learner, &mut rng).unwrap();
        if let Some((n_t, i)) = session.position() {
            assert!(n_t < model.k_t && i < model.n_inventory());
            assert!(model.inventory(i).abs() <= model.q_bar + 1e-12);
        }
    }
}
