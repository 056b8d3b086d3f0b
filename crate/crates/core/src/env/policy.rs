//! Action selection over candidate next states.
//!
//! - `explore_softmax`: weights `β̄·ε(z')`, the last residual magnitude at the
//!   candidate state, with `b` for states never visited. Favours states whose
//!   estimate is still moving.
//! - `boltzmann`: weights `β̄·q(z')`, favouring the maximising action.
//! - `epsilon_uniform`: greedy on `q(z')` with probability `1 − ε`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::engine::{IterateTable, StateIndex};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolicyMode {
    #[default]
    ExploreSoftmax,
    Boltzmann,
    EpsilonUniform,
}

impl PolicyMode {
    pub fn name(self) -> &'static str {
        match self {
            PolicyMode::ExploreSoftmax => "explore_softmax",
            PolicyMode::Boltzmann => "boltzmann",
            PolicyMode::EpsilonUniform => "epsilon_uniform",
        }
    }
}

impl fmt::Display for PolicyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            PolicyMode::ExploreSoftmax,
            PolicyMode::Boltzmann,
            PolicyMode::EpsilonUniform,
        ]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown action policy `{s}`")))
    }
}

/// Probabilities proportional to `exp(w_i)`, computed with the max shifted out.
pub fn softmax(log_weights: &[f64]) -> Vec<f64> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::INFINITY {
        let hits = log_weights.iter().filter(|w| **w == f64::INFINITY).count() as f64;
        return log_weights
            .iter()
            .map(|w| if *w == f64::INFINITY { 1.0 / hits } else { 0.0 })
            .collect();
    }
    let exp: Vec<f64> = log_weights.iter().map(|w| (w - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding: fall back to the last positive-probability entry
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionPolicyState {
    pub mode: PolicyMode,
    pub beta_bar: f64,
    pub b_unvisited: f64,
    pub epsilon: f64,
    magnitude: Vec<Option<f64>>,
}

impl ActionPolicyState {
    pub fn new(states: usize, mode: PolicyMode, beta_bar: f64, b_unvisited: f64, epsilon: f64) -> Result<Self> {
        if !(b_unvisited > 0.0) {
            return Err(Error::param("b_unvisited", "must be > 0"));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::param("epsilon", "must lie in [0, 1]"));
        }
        if !beta_bar.is_finite() {
            return Err(Error::param("beta_bar", "must be finite"));
        }
        Ok(Self {
            mode,
            beta_bar,
            b_unvisited,
            epsilon,
            magnitude: vec![None; states],
        })
    }

    pub fn record_residual(&mut self, z: StateIndex, residual: f64) {
        self.magnitude[z.0] = Some(residual.abs());
    }

    /// Exploration score ε(z): last residual magnitude, `b` if unvisited.
    pub fn exploration_score(&self, z: StateIndex) -> f64 {
        self.magnitude[z.0].unwrap_or(self.b_unvisited)
    }

    /// Sampling distribution over `candidates`.
    pub fn probabilities(&self, candidates: &[StateIndex], table: &IterateTable) -> Vec<f64> {
        match self.mode {
            PolicyMode::ExploreSoftmax => {
                let w: Vec<f64> = candidates
                    .iter()
                    .map(|&z| self.beta_bar * self.exploration_score(z))
                    .collect();
                softmax(&w)
            }
            PolicyMode::Boltzmann => {
                let w: Vec<f64> = candidates.iter().map(|&z| self.beta_bar * table.value(z)).collect();
                softmax(&w)
            }
            PolicyMode::EpsilonUniform => {
                let k = candidates.len() as f64;
                let best = candidates.iter().enumerate().fold(0, |b, (i, &z)| {
                    if table.value(z) > table.value(candidates[b]) {
                        i
                    } else {
                        b
                    }
                });
                (0..candidates.len())
                    .map(|i| self.epsilon / k + if i == best { 1.0 - self.epsilon } else { 0.0 })
                    .collect()
            }
        }
    }
}

/// Index into `candidates` of the sampled action.
pub fn sample_action<R: Rng + ?Sized>(
    policy: &ActionPolicyState,
    candidates: &[StateIndex],
    table: &IterateTable,
    rng: &mut R,
) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::param("candidates", "need at least one action"));
    }
    Ok(draw(&policy.probabilities(candidates, table), rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn softmax_examples() {
        let p = softmax(&[0.0, 3f64.ln()]);
        assert_relative_eq!(p[0], 0.25, epsilon = 1e-15);
        assert_relative_eq!(p[1], 0.75, epsilon = 1e-15);
        assert_eq!(softmax(&[2.0; 4]), vec![0.25; 4]);
        let p = softmax(&[1e6, 0.0]);
        assert_eq!(p, vec![1.0, 0.0]);
    }

    #[test]
    fn boltzmann_concentrates_for_large_beta() {
        let table = IterateTable::from_values(vec![0.0, 1.0, 0.5]);
        let pol = ActionPolicyState::new(3, PolicyMode::Boltzmann, 1e3, 1.0, 0.0).unwrap();
        let cands = [StateIndex(0), StateIndex(1), StateIndex(2)];
        let p = pol.probabilities(&cands, &table);
        assert!(p[1] > 1.0 - 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(sample_action(&pol, &cands, &table, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn exploration_uses_bonus_for_unvisited() {
        let table = IterateTable::new(2, 0.0);
        let mut pol = ActionPolicyState::new(2, PolicyMode::ExploreSoftmax, 5.0, 1.0, 0.0).unwrap();
        pol.record_residual(StateIndex(0), -0.2);
        assert_eq!(pol.exploration_score(StateIndex(0)), 0.2);
        assert_eq!(pol.exploration_score(StateIndex(1)), 1.0);
        let p = pol.probabilities(&[StateIndex(0), StateIndex(1)], &table);
        assert_relative_eq!(p[1] / p[0], 4f64.exp(), max_relative = 1e-12);
    }

    #[test]
    fn epsilon_uniform_mixes() {
        let table = IterateTable::from_values(vec![0.0, 1.0]);
        let pol = ActionPolicyState::new(2, PolicyMode::EpsilonUniform, 5.0, 1.0, 0.2).unwrap();
        let p = pol.probabilities(&[StateIndex(0), StateIndex(1)], &table);
        assert_relative_eq!(p[0], 0.1);
        assert_relative_eq!(p[1], 0.9);
    }
}
