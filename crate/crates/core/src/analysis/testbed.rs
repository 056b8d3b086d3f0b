//! Two-state Markov chain testbed for the error bound.
//!
//! Both states carry the quadratic problem `m = q − x`, `x ~ N(q*, σ²)`;
//! the chain switches state with probability `p` after every step and the
//! error is tracked at the starting state `z₁`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::sequences::{theorem1_bound, BoundSequences};
use crate::error::{Error, Result};

/// `a_1 = 1`, `a_j = p(1 − p)^{j−2}`: return-time tails of the switching chain.
pub fn return_time_tails(switch_prob: f64, k: usize) -> Vec<f64> {
    (1..=k)
        .map(|j| {
            if j == 1 {
                1.0
            } else {
                switch_prob * (1.0 - switch_prob).powi(j as i32 - 2)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestbedRate {
    /// `η / n(z)`.
    InversePower {
        eta: f64,
    },
    Constant(f64),
}

impl TestbedRate {
    fn at(self, visits: f64) -> f64 {
        match self {
            TestbedRate::InversePower { eta } => eta / visits,
            TestbedRate::Constant(g) => g,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoStateTestbed {
    pub switch_prob: f64,
    pub sigma: f64,
    pub q_star: f64,
    pub rate: TestbedRate,
    pub horizon: usize,
    pub replications: usize,
}

/// Monte-Carlo moments indexed by `n = 0..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestbedMoments {
    /// `E[e^n(z₁)]`.
    pub error: Vec<f64>,
    /// `E[α_n e^n] / E[e^n]`.
    pub b: Vec<f64>,
    /// `E[M_n]`.
    pub expected_m: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub calibration_horizon: usize,
    pub b_prime: f64,
    /// `(n, simulated E[e^n], bound)` for `n ≥ calibration_horizon`.
    pub rows: Vec<(usize, f64, f64)>,
    pub violations: Vec<usize>,
}

impl TwoStateTestbed {
    pub fn simulate(&self, seed: u64) -> Result<TestbedMoments> {
        if !(self.switch_prob > 0.0 && self.switch_prob <= 1.0) {
            return Err(Error::param("switch_prob", "must lie in (0, 1]"));
        }
        let (l, b) = (1.0, 1.0);
        let v = 2.0 * self.sigma * self.sigma;
        let n = self.horizon;
        let mut err = vec![0.0; n + 1];
        let mut weighted = vec![0.0; n + 1];
        let mut m_sum = vec![0.0; n + 1];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..self.replications {
            let mut q = [0.0f64; 2];
            let mut visits = [0.0f64; 2];
            let mut z = 0usize;
            for k in 0..=n {
                let e = (q[0] - self.q_star).powi(2);
                let g = self.rate.at(visits[0] + 1.0);
                err[k] += e;
                weighted[k] += (1.0 - (2.0 * l * g - b * g * g)) * e;
                m_sum[k] += b * g * g * (4.0 + 3.0 * v);
                visits[z] += 1.0;
                let g = self.rate.at(visits[z]);
                let x = self.q_star + self.sigma * rng.sample::<f64, _>(StandardNormal);
                q[z] -= g * (q[z] - x);
                if rng.random::<f64>() < self.switch_prob {
                    z = 1 - z;
                }
            }
        }
        let r = self.replications as f64;
        let error: Vec<f64> = err.iter().map(|x| x / r).collect();
        let b = weighted
            .iter()
            .zip(&err)
            .map(|(w, e)| if *e > 0.0 { w / e } else { 0.0 })
            .collect();
        Ok(TestbedMoments {
            error,
            b,
            expected_m: m_sum.iter().map(|x| x / r).collect(),
        })
    }

    /// Bound sequences built from the simulated moments (`b`, `E[M]`, `e¹`).
    pub fn sequences(&self, moments: &TestbedMoments) -> Result<BoundSequences> {
        let k = self.horizon;
        BoundSequences::from_error_model(
            return_time_tails(self.switch_prob, k),
            moments.b[1..=k].to_vec(),
            moments.error[1],
            &moments.expected_m[1..=k],
            1e-8,
        )
    }

    /// Calibrate `B′` at `calibration_horizon` and compare at every later horizon.
    pub fn bound_report(&self, moments: &TestbedMoments, calibration_horizon: usize) -> Result<BoundReport> {
        let seq = self.sequences(moments)?;
        if calibration_horizon < 3 || calibration_horizon > self.horizon {
            return Err(Error::param("calibration_horizon", "must lie in 3..=horizon"));
        }
        let unit = theorem1_bound(&seq, 1.0, calibration_horizon);
        let b_prime = moments.error[calibration_horizon] / unit;
        let rows: Vec<(usize, f64, f64)> = (calibration_horizon..=self.horizon)
            .map(|n| (n, moments.error[n], theorem1_bound(&seq, b_prime, n)))
            .collect();
        // calibration point holds with equality up to rounding
        let violations = rows
            .iter()
            .filter(|(_, e, bound)| *e > bound * (1.0 + 1e-12))
            .map(|(n, _, _)| *n)
            .collect();
        Ok(BoundReport {
            calibration_horizon,
            b_prime,
            rows,
            violations,
        })
    }
}
