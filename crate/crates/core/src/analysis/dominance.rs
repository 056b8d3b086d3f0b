//! Scalar error model `e' = 1_A(α(γ)e + M(γ) + S) + 1_{A^c} e` with
//! `α(γ) = 1 − 2Lγ + Bγ²` and `M(γ) = B(2 + v)γ²`, and the check that the
//! greedy rate `γ*(e) = (L/B)·e/(e + 2 + v)` is pathwise optimal.
//!
//! Plugging `γ*` in gives `g(x) = x − L²x²/(B(x + 2 + v))`, increasing on
//! `(−(2 + v), x₂)`; below `x₂` a smaller error can never be overtaken.

use rand::Rng;

use crate::error::{Error, Result};
use crate::stepsize::optimal_gamma_rl;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorModel {
    pub l: f64,
    pub b: f64,
    pub v: f64,
}

impl ErrorModel {
    pub fn new(l: f64, b: f64, v: f64) -> Result<Self> {
        if !(l > 0.0 && b > 0.0 && v >= 0.0) {
            return Err(Error::param("L,B,v", "need L > 0, B > 0, v >= 0"));
        }
        Ok(Self { l, b, v })
    }

    pub fn alpha(&self, gamma: f64) -> f64 {
        1.0 - 2.0 * self.l * gamma + self.b * gamma * gamma
    }

    pub fn noise(&self, gamma: f64) -> f64 {
        self.b * (2.0 + self.v) * gamma * gamma
    }

    /// One-step objective `α(γ)e + M(γ)`.
    pub fn next(&self, e: f64, gamma: f64) -> f64 {
        self.alpha(gamma) * e + self.noise(gamma)
    }

    pub fn greedy(&self, e: f64) -> f64 {
        optimal_gamma_rl(e, self.l, self.b, self.v)
    }

    /// Minimal one-step value `g(x)`.
    pub fn g(&self, x: f64) -> f64 {
        x - self.l * self.l * x * x / (self.b * (x + 2.0 + self.v))
    }

    /// Right end of the region where `g` increases (`∞` when `B ≥ L²`).
    pub fn x2(&self) -> f64 {
        let l2 = self.l * self.l;
        if self.b >= l2 {
            f64::INFINITY
        } else {
            (2.0 + self.v) * (-1.0 + (l2 / (l2 - self.b)).sqrt())
        }
    }
}

/// Adapted comparison step sizes (functions of the past only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComparisonPolicy {
    /// iid `U(0, max)`.
    Uniform {
        max: f64,
    },
    /// `η / (visits + 1)`.
    InverseVisits {
        eta: f64,
    },
    /// `gain · e / (1 + e)`: reacts to its own current error.
    ErrorFeedback {
        gain: f64,
    },
    Constant(f64),
}

impl ComparisonPolicy {
    fn gamma<R: Rng + ?Sized>(&self, visits: u64, e: f64, rng: &mut R) -> f64 {
        match *self {
            ComparisonPolicy::Uniform { max } => rng.random::<f64>() * max,
            ComparisonPolicy::InverseVisits { eta } => eta / (visits + 1) as f64,
            ComparisonPolicy::ErrorFeedback { gain } => gain * e.max(0.0) / (1.0 + e.max(0.0)),
            ComparisonPolicy::Constant(g) => g,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub greedy_path: Vec<f64>,
    /// Number of `(policy, step)` pairs where the comparison beat the greedy path.
    pub violations: usize,
    /// `min (ẽ_n − e_n)` over all policies and steps.
    pub worst_margin: f64,
}

/// Simulate the greedy path and every comparison policy on common `(A_n, S_n)`.
/// `S_n = −u_n · s_frac · g(e_n)` with `u_n ~ U(0, 1)` keeps errors positive.
pub fn dominance_check<R: Rng + ?Sized>(
    model: &ErrorModel,
    e0: f64,
    horizon: usize,
    visit_prob: f64,
    s_frac: f64,
    policies: &[ComparisonPolicy],
    rng: &mut R,
) -> Result<DominanceReport> {
    if !(e0 >= 0.0 && e0 < model.x2()) {
        return Err(Error::param("e0", "initial error must lie in [0, x2)"));
    }
    let visits: Vec<bool> = (0..horizon).map(|_| rng.random::<f64>() < visit_prob).collect();
    let u: Vec<f64> = (0..horizon).map(|_| rng.random::<f64>()).collect();
    let mut greedy_path = Vec::with_capacity(horizon + 1);
    let mut shocks = Vec::with_capacity(horizon);
    let mut e = e0;
    greedy_path.push(e);
    for n in 0..horizon {
        let s = -u[n] * s_frac * model.g(e).max(0.0);
        shocks.push(s);
        if visits[n] {
            e = model.next(e, model.greedy(e)) + s;
        }
        greedy_path.push(e);
    }
    let mut violations = 0;
    let mut worst_margin = f64::INFINITY;
    for policy in policies {
        let mut et = e0;
        let mut count = 0;
        for n in 0..horizon {
            if visits[n] {
                let g = policy.gamma(count, et, rng);
                count += 1;
                et = model.next(et, g) + shocks[n];
            }
            let margin = et - greedy_path[n + 1];
            worst_margin = worst_margin.min(margin);
            if margin < 0.0 {
                violations += 1;
            }
        }
    }
    Ok(DominanceReport {
        greedy_path,
        violations,
        worst_margin,
    })
}
