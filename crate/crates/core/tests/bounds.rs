//! Bound sequences, the two-state testbed and the one-step error model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sastep::analysis::dominance::ErrorModel;
use sastep::analysis::sequences::{
    convolution_powers, lemma5_recursion, renewal_series, theorem1_bound, BoundSequences,
};
use sastep::analysis::testbed::return_time_tails;
use sastep::harness::bounds::run_bounds;
use sastep::harness::config::BoundsConfig;
use sastep::SeedTag;

#[test]
fn unit_mass_at_one_is_a_convolution_fixed_point() {
    let p = convolution_powers(&[1.0], None, 5, 20).unwrap();
    assert_eq!(p.powers.len(), 5);
    for power in &p.powers {
        assert_eq!(power[0], 1.0);
        assert!(power[1..].iter().all(|x| *x == 0.0));
    }
    assert!(p.sup_changes.iter().all(|c| *c == 0.0));
    // so its renewal series never settles
    assert!(renewal_series(&[1.0], 20, 1e-8, 50).is_err());
}

#[test]
fn geometric_powers_spread_out() {
    let a = return_time_tails(0.3, 80);
    let mass: f64 = a.iter().sum();
    let a_bar: Vec<f64> = a.iter().map(|x| x / mass).collect();
    let p = convolution_powers(&a_bar, None, 12, 80).unwrap();
    for w in p.sup_changes.windows(2) {
        assert!(w[1] <= w[0] + 1e-15, "{:?}", p.sup_changes);
    }
    // truncated mass never grows and the head decays
    let mass_of = |x: &Vec<f64>| x.iter().sum::<f64>();
    for w in p.powers.windows(2) {
        assert!(mass_of(&w[1]) <= mass_of(&w[0]) + 1e-12);
        assert!(w[1][0] < w[0][0]);
    }
    let (u, used) = renewal_series(&a_bar, 80, 1e-10, 10_000).unwrap();
    assert!(used > 1);
    // ā₁ carries no delay, so the renewal density tends to 1/Σ(k − 1)ā_k
    let mean_delay: f64 = a_bar.iter().enumerate().map(|(k, x)| k as f64 * x).sum();
    assert!((u[79] - 1.0 / mean_delay).abs() < 1e-6, "{}", u[79]);
}

#[test]
fn bad_kernels_are_rejected() {
    assert!(convolution_powers(&[0.7, 0.7], None, 3, 10).is_err());
    assert!(convolution_powers(&[-0.1, 0.5], None, 3, 10).is_err());
    assert!(convolution_powers(&[0.5], None, 0, 10).is_err());
}

#[test]
fn direct_and_representation_forms_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for n in [1, 2, 10, 60] {
        let draw = |rng: &mut ChaCha8Rng| (0..n).map(|_| rng.random::<f64>()).collect::<Vec<f64>>();
        let (mu, a, b, eps) = (draw(&mut rng), draw(&mut rng), draw(&mut rng), draw(&mut rng));
        let r = lemma5_recursion(&mu, &a, &b, &eps, n).unwrap();
        assert_eq!(r.direct.len(), n);
        assert!(r.identity_gap <= 1e-12, "n={n}: {}", r.identity_gap);
        assert_eq!(r.direct[0], eps[0]);
    }
    assert!(lemma5_recursion(&[1.0], &[1.0], &[1.0], &[1.0], 2).is_err());
}

#[test]
fn bound_is_empty_below_three_steps() {
    let a = return_time_tails(0.3, 20);
    let seq = BoundSequences::from_error_model(a, vec![0.9; 20], 1.0, &[0.1; 20], 1e-10).unwrap();
    assert_eq!(theorem1_bound(&seq, 1.0, 1), 0.0);
    assert_eq!(theorem1_bound(&seq, 1.0, 2), 0.0);
    assert!(theorem1_bound(&seq, 1.0, 3) > 0.0);
    assert_eq!(seq.mu_bar(4, 0), 1.0);
    assert!((seq.mu_bar(4, 2) - (-0.2f64).exp()).abs() < 1e-15);
    // ε₁ = e¹ a₁
    assert_eq!(seq.epsilon[0], 1.0);
}

#[test]
fn greedy_rate_minimises_the_one_step_error() {
    let model = ErrorModel::new(1.0, 2.0, 0.5).unwrap();
    for e in [0.01, 0.3, 1.0, 7.0] {
        let g = model.greedy(e);
        let best = model.next(e, g);
        assert!((best - model.g(e)).abs() < 1e-12);
        for k in 0..=400 {
            assert!(model.next(e, k as f64 / 200.0) >= best - 1e-12);
        }
    }
    assert!(model.x2().is_infinite());
    assert!(ErrorModel::new(2.0, 1.0, 0.5).unwrap().x2().is_finite());
    assert!(ErrorModel::new(0.0, 1.0, 0.5).is_err());
}

#[test]
fn bounds_pipeline_smoke() {
    let cfg = BoundsConfig {
        horizon: 40,
        replications: 2000,
        lemma5_instances: 5,
        lemma5_n: 30,
        ..BoundsConfig::default()
    };
    let out = run_bounds(&cfg, 1).unwrap();
    assert!(out.testbed.violations.is_empty(), "{:?}", out.testbed.violations);
    assert!(out.testbed.b_prime > 0.0);
    assert!(out.lemma5_max_gap <= 1e-12);
    assert_eq!(out.contraction_violations, 0);
    let bounds: Vec<_> = out
        .frame
        .rows
        .iter()
        .filter(|r| r.metric == "bound" && r.seed == SeedTag::All)
        .collect();
    assert_eq!(bounds.len(), cfg.horizon - cfg.calibration + 1);
}
