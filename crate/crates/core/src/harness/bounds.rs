//! Numerical checks of the error-bound machinery, packaged as a result frame.
//!
//! Rows use `algo = analysis` and one `policy` label per check:
//! `testbed` (simulated error vs calibrated bound), `lemma5` (identity gap
//! on random instances), `contraction` (one-step margins per algorithm).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{BoundsConfig, RateKind};
use super::runner::{ResultFrame, ResultRow, SeedTag};
use crate::analysis::contraction::{prop0_contraction_check, ContractionSetup, QuadraticProblem};
use crate::analysis::lemma5_recursion;
use crate::analysis::testbed::{BoundReport, TestbedRate, TwoStateTestbed};
use crate::error::Result;
use crate::stepsize::HlScheme;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsOutput {
    pub frame: ResultFrame,
    pub testbed: BoundReport,
    pub lemma5_max_gap: f64,
    pub contraction_violations: usize,
}

fn row(step: u64, policy: &str, metric: &str, value: f64) -> ResultRow {
    ResultRow {
        step,
        metric: metric.to_string(),
        value,
        algo: "analysis".to_string(),
        policy: policy.to_string(),
        seed: SeedTag::All,
    }
}

pub fn testbed_from(cfg: &BoundsConfig) -> TwoStateTestbed {
    TwoStateTestbed {
        switch_prob: cfg.switch_prob,
        sigma: cfg.sigma,
        q_star: cfg.q_star,
        rate: match cfg.rate {
            RateKind::Inv => TestbedRate::InversePower { eta: cfg.eta },
            RateKind::Constant => TestbedRate::Constant(cfg.gamma),
        },
        horizon: cfg.horizon,
        replications: cfg.replications,
    }
}

pub fn run_bounds(cfg: &BoundsConfig, seed: u64) -> Result<BoundsOutput> {
    let mut frame = ResultFrame::default();

    let testbed = testbed_from(cfg);
    let moments = testbed.simulate(seed)?;
    let report = testbed.bound_report(&moments, cfg.calibration)?;
    for (n, e, bound) in &report.rows {
        frame.push(row(*n as u64, "testbed", "simulated_error", *e));
        frame.push(row(*n as u64, "testbed", "bound", *bound));
    }
    frame.push(row(0, "testbed", "b_prime", report.b_prime));
    frame.push(row(0, "testbed", "violations", report.violations.len() as f64));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.lemma5_n;
    let mut max_gap: f64 = 0.0;
    for k in 0..cfg.lemma5_instances {
        let mu: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let eps: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let mut a: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        a.sort_by(|x, y| y.total_cmp(x));
        a[0] = 1.0;
        let res = lemma5_recursion(&mu, &a, &b, &eps, n)?;
        let scale = res.direct.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let rel = res.identity_gap / scale;
        max_gap = max_gap.max(rel);
        frame.push(row(k as u64, "lemma5", "relative_gap", rel));
    }

    let problem = QuadraticProblem {
        q_star: 0.0,
        sigma: 1.0,
    };
    let setups = [
        ("rl", ContractionSetup::Rl),
        (
            "saga",
            ContractionSetup::Saga {
                memory: vec![0.5, -1.0, 0.2, 1.5, -0.3],
                c: 1.0,
            },
        ),
        (
            "pass",
            ContractionSetup::Pass {
                last_residual: 1.0,
                gamma_hat: 0.0,
                scheme: HlScheme::TwoThirds,
            },
        ),
    ];
    let mut violations = 0;
    let mut step = 0u64;
    for (name, setup) in &setups {
        for q in [0.5, 2.0, 5.0] {
            for gamma in [0.05, 0.1, 0.2, 0.4, 0.5] {
                let setup = match setup {
                    ContractionSetup::Pass {
                        last_residual, scheme, ..
                    } => ContractionSetup::Pass {
                        last_residual: *last_residual,
                        gamma_hat: 2.0 * gamma,
                        scheme: *scheme,
                    },
                    s => s.clone(),
                };
                let r = prop0_contraction_check(&setup, problem, q, gamma, 10_000, &mut rng)?;
                violations += usize::from(r.violated);
                frame.push(ResultRow {
                    algo: name.to_string(),
                    ..row(step, "contraction", "margin", r.rhs - r.lhs_mean)
                });
                step += 1;
            }
        }
    }
    frame.push(row(0, "contraction", "violations", violations as f64));
    frame.sort();
    Ok(BoundsOutput {
        frame,
        testbed: report,
        lemma5_max_gap: max_gap,
        contraction_violations: violations,
    })
}
