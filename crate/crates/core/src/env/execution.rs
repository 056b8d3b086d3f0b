//! Optimal execution on a time × inventory grid.
//!
//! Price `dS = α dt + σ dW`; trading at speed `ν` over a step of length `Δ`
//! earns, in wealth plus inventory mark-to-market,
//!
//! `M(ν) = −ν·ΔS̄ − κν²Δ + q·ΔS + νΔ·ΔS`, with `ΔS̄ = ∫(S_s − S_t) ds`,
//!
//! and pays a running penalty `φΔq²`. At `T` the inventory is liquidated at
//! cost `A·q²`. Targets are grid inventories: from `q_i`, picking `q_j` means
//! `ν = (q_j − q_i)/Δ`; the grid itself enforces `|q| ≤ q̄`.
//!
//! State encoding: `id = n_t·(k_q + 1) + i` for `n_t ∈ 0..=k_T`, `i ∈ 0..=k_q`.

use rand::Rng;
use rand_distr::StandardNormal;

use super::policy::{sample_action, ActionPolicyState};
use super::EpisodeTrace;
use crate::algorithms::Learner;
use crate::engine::{IterateTable, StateIndex};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ExecModel {
    pub alpha: f64,
    pub sigma: f64,
    pub kappa: f64,
    pub phi: f64,
    pub a_terminal: f64,
    pub horizon: f64,
    pub k_t: usize,
    pub k_q: usize,
    pub q_bar: f64,
}

impl Default for ExecModel {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            sigma: 0.1,
            kappa: 0.1,
            phi: 0.1,
            a_terminal: 1.0,
            horizon: 1.0,
            k_t: 10,
            k_q: 10,
            q_bar: 1.0,
        }
    }
}

impl ExecModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v, strict) in [
            ("sigma", self.sigma, true),
            ("kappa", self.kappa, true),
            ("horizon", self.horizon, true),
            ("q_bar", self.q_bar, true),
            ("phi", self.phi, false),
            ("terminal_penalty", self.a_terminal, false),
        ] {
            if !v.is_finite() || v < 0.0 || (strict && v == 0.0) {
                return Err(Error::param(name, format!("out of range: {v}")));
            }
        }
        if !self.alpha.is_finite() {
            return Err(Error::param("alpha", "must be finite"));
        }
        if self.k_t == 0 || self.k_q == 0 {
            return Err(Error::param("k_t,k_q", "grids need at least one step"));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.k_t as f64
    }

    /// `q_i = −q̄ + 2i·q̄/k_q`.
    pub fn inventory(&self, i: usize) -> f64 {
        -self.q_bar + 2.0 * i as f64 * self.q_bar / self.k_q as f64
    }

    pub fn n_inventory(&self) -> usize {
        self.k_q + 1
    }

    pub fn n_states(&self) -> usize {
        (self.k_t + 1) * self.n_inventory()
    }

    pub fn index(&self, n_t: usize, i: usize) -> StateIndex {
        StateIndex(n_t * self.n_inventory() + i)
    }

    pub fn decode(&self, z: StateIndex) -> (usize, usize) {
        (z.0 / self.n_inventory(), z.0 % self.n_inventory())
    }

    pub fn speed(&self, i: usize, j: usize) -> f64 {
        (self.inventory(j) - self.inventory(i)) / self.dt()
    }

    pub fn terminal_value(&self, i: usize) -> f64 {
        -self.a_terminal * self.inventory(i).powi(2)
    }

    /// `E[M] = qαΔ + ναΔ²/2 − κν²Δ`.
    pub fn expected_gain(&self, nu: f64, q: f64) -> f64 {
        let dt = self.dt();
        q * self.alpha * dt + nu * self.alpha * dt * dt / 2.0 - self.kappa * nu * nu * dt
    }

    pub fn realized_gain(&self, nu: f64, q: f64, ds: f64, ds_bar: f64) -> f64 {
        let dt = self.dt();
        -nu * ds_bar - self.kappa * nu * nu * dt + q * ds + nu * dt * ds
    }

    pub fn running_penalty(&self, q: f64) -> f64 {
        self.phi * self.dt() * q * q
    }

    /// Exact joint draw of `(ΔS, ΔS̄)` over one step.
    pub fn sample_increments<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let dt = self.dt();
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let ds = self.alpha * dt + self.sigma * dt.sqrt() * z1;
        // Cov(ΔS, ΔS̄) = σ²Δ²/2, Var(ΔS̄) = σ²Δ³/3
        let ds_bar = self.alpha * dt * dt / 2.0
            + self.sigma * dt.powf(1.5) / 2.0 * z1
            + self.sigma * (dt.powi(3) / 12.0).sqrt() * z2;
        (ds, ds_bar)
    }

    /// Table with the terminal row set to `−A q²` and zeros elsewhere.
    pub fn initial_table(&self) -> IterateTable {
        let mut values = vec![0.0; self.n_states()];
        for i in 0..self.n_inventory() {
            values[self.index(self.k_t, i).0] = self.terminal_value(i);
        }
        IterateTable::from_values(values)
    }
}

/// `−sup_j {M^ν − φΔq² + v(n_t+1, q_j) − v(n_t, q)}`, so `v ← v − γ·m`
/// moves `v` towards the sampled optimum.
pub fn exec_residual(v: &IterateTable, model: &ExecModel, n_t: usize, i: usize, ds: f64, ds_bar: f64) -> f64 {
    assert!(n_t < model.k_t, "terminal states are not learned");
    let q = model.inventory(i);
    let here = v.value(model.index(n_t, i));
    let best = (0..model.n_inventory())
        .map(|j| model.realized_gain(model.speed(i, j), q, ds, ds_bar) + v.value(model.index(n_t + 1, j)))
        .fold(f64::NEG_INFINITY, f64::max);
    -(best - model.running_penalty(q) - here)
}

/// Step-level driver so budgets and metric cadences can cut anywhere.
#[derive(Debug, Clone)]
pub struct ExecSession {
    pub policy: ActionPolicyState,
    position: Option<(usize, usize)>,
    candidates: Vec<StateIndex>,
}

impl ExecSession {
    pub fn new(model: &ExecModel, policy: ActionPolicyState) -> Self {
        Self {
            policy,
            position: None,
            candidates: Vec::with_capacity(model.n_inventory()),
        }
    }

    pub fn position(&self) -> Option<(usize, usize)> {
        self.position
    }

    /// One learner update; returns true when the step closed an episode.
    pub fn step<R: Rng + ?Sized>(&mut self, model: &ExecModel, learner: &mut Learner, rng: &mut R) -> Result<bool> {
        let (n_t, i) = match self.position {
            Some(p) => p,
            None => (0, rng.random_range(0..model.n_inventory())),
        };
        let (ds, ds_bar) = model.sample_increments(rng);
        let z = model.index(n_t, i);
        let m = exec_residual(learner.table(), model, n_t, i, ds, ds_bar);
        learner.observe(z, m, rng)?;
        self.policy.record_residual(z, m);

        self.candidates.clear();
        self.candidates
            .extend((0..model.n_inventory()).map(|j| model.index(n_t + 1, j)));
        let j = sample_action(&self.policy, &self.candidates, learner.table(), rng)?;
        if n_t + 1 == model.k_t {
            self.position = None;
            learner.end_episode();
            Ok(true)
        } else {
            self.position = Some((n_t + 1, j));
            Ok(false)
        }
    }
}

/// Runs until the episode ends or `max_steps` updates were made.
pub fn exec_episode<R: Rng + ?Sized>(
    model: &ExecModel,
    learner: &mut Learner,
    session: &mut ExecSession,
    max_steps: u64,
    rng: &mut R,
) -> Result<EpisodeTrace> {
    let mut steps = 0;
    while steps < max_steps {
        steps += 1;
        if session.step(model, learner, rng)? {
            break;
        }
    }
    Ok(EpisodeTrace {
        steps,
        error_norm: learner.residual_norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_and_terminal_row() {
        let m = ExecModel::default();
        assert_relative_eq!(m.inventory(0), -1.0);
        assert_relative_eq!(m.inventory(10), 1.0);
        assert_relative_eq!(m.inventory(5), 0.0);
        let t = m.initial_table();
        for i in 0..m.n_inventory() {
            assert_eq!(t.value(m.index(m.k_t, i)), -m.inventory(i).powi(2));
        }
        for id in 0..m.n_states() {
            let (n_t, i) = m.decode(StateIndex(id));
            assert_eq!(m.index(n_t, i), StateIndex(id));
        }
    }

    #[test]
    fn residual_zero_without_drift_and_noise() {
        let m = ExecModel {
            alpha: 0.0,
            phi: 0.0,
            ..ExecModel::default()
        };
        let v = IterateTable::new(m.n_states(), 0.0);
        for i in 0..m.n_inventory() {
            assert_eq!(exec_residual(&v, &m, 0, i, 0.0, 0.0), 0.0);
        }
    }

    #[test]
    fn expected_gain_matches_realized_mean() {
        let m = ExecModel::default();
        let dt = m.dt();
        let (nu, q) = (0.7, -0.4);
        let mean = m.realized_gain(nu, q, m.alpha * dt, m.alpha * dt * dt / 2.0);
        assert_relative_eq!(mean, m.expected_gain(nu, q), epsilon = 1e-15);
    }
}
