//! Per-observation update rules and the per-path [`Learner`].
//!
//! - RL: `q(z) ← q(z) − γ°(z)·m`.
//! - SAGA: the residual is corrected by a stored memory slot,
//!   `m − M[z, i] + mean_j M[z, j]`, then the slot is overwritten.
//! - PASS: the rate γ̂(z) is raised by `h` when the residual keeps the sign
//!   it had at the last visit of `z`, lowered by `l` otherwise.
//! - Vectorial PASS: one branch for all coordinates, decided by the sign of
//!   `⟨γ ⊙ m_n, m_{n−1}⟩`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::engine::{IterateTable, StateIndex, Transition};
use crate::error::{Error, Result};
use crate::stepsize::{h_increase, l_decrease, BaseSchedule, HlScheme, PassState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Algorithm {
    #[default]
    Rl,
    Saga,
    Pass,
    PassVectorial,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Rl,
        Algorithm::Saga,
        Algorithm::Pass,
        Algorithm::PassVectorial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rl => "rl",
            Algorithm::Saga => "saga",
            Algorithm::Pass => "pass",
            Algorithm::PassVectorial => "pass_vec",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}` (expected rl, saga, pass, pass_vec)")))
    }
}

/// Which PASS branch produced the rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Increase,
    Decrease,
    FirstVisit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub state: StateIndex,
    pub rate_used: f64,
    pub residual: f64,
    /// `None` for algorithms without a sign test (RL, SAGA).
    pub branch: Option<Branch>,
}

/// Per-state table of `depth` stored residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct SagaMemory {
    depth: usize,
    slots: Vec<f64>,
}

impl SagaMemory {
    pub fn new(states: usize, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::param("saga_m", "memory depth must be >= 1"));
        }
        Ok(Self {
            depth,
            slots: vec![0.0; states * depth],
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn slots(&self, z: StateIndex) -> &[f64] {
        &self.slots[z.0 * self.depth..(z.0 + 1) * self.depth]
    }

    pub fn slots_mut(&mut self, z: StateIndex) -> &mut [f64] {
        &mut self.slots[z.0 * self.depth..(z.0 + 1) * self.depth]
    }

    pub fn mean(&self, z: StateIndex) -> f64 {
        self.slots(z).iter().sum::<f64>() / self.depth as f64
    }
}

fn visit(table: &mut IterateTable, schedule: &BaseSchedule, t: &Transition) -> Result<f64> {
    table.record_visit(t.state, t.step)?;
    Ok(schedule.rate(t.state, table.visits(t.state)))
}

pub fn step_rl(table: &mut IterateTable, schedule: &BaseSchedule, t: &Transition) -> Result<StepReport> {
    let rate = visit(table, schedule, t)?;
    table.apply_update(t.state, rate, t.residual)?;
    Ok(StepReport {
        state: t.state,
        rate_used: rate,
        residual: t.residual,
        branch: None,
    })
}

/// SAGA step with an explicit slot index (0-based).
pub fn step_saga_slot(
    table: &mut IterateTable,
    memory: &mut SagaMemory,
    schedule: &BaseSchedule,
    t: &Transition,
    slot: usize,
) -> Result<StepReport> {
    if slot >= memory.depth {
        return Err(Error::param("slot", format!("{slot} >= depth {}", memory.depth)));
    }
    let rate = visit(table, schedule, t)?;
    let corrected = t.residual - memory.slots(t.state)[slot] + memory.mean(t.state);
    table.apply_update(t.state, rate, corrected)?;
    memory.slots_mut(t.state)[slot] = t.residual;
    Ok(StepReport {
        state: t.state,
        rate_used: rate,
        residual: t.residual,
        branch: None,
    })
}

pub fn step_saga<R: Rng + ?Sized>(
    table: &mut IterateTable,
    memory: &mut SagaMemory,
    schedule: &BaseSchedule,
    t: &Transition,
    slot_rng: &mut R,
) -> Result<StepReport> {
    let slot = slot_rng.random_range(0..memory.depth);
    step_saga_slot(table, memory, schedule, t, slot)
}

/// PASS rate for one coordinate given the current base rate.
fn pass_rate(pass: &PassState, z: StateIndex, base: f64, same_sign: bool) -> Result<(f64, Branch)> {
    if pass.last_residual(z).is_none() {
        return Ok((base, Branch::FirstVisit));
    }
    let prev = pass.gamma_hat(z);
    if same_sign {
        Ok((h_increase(prev, base, pass.scheme)?, Branch::Increase))
    } else {
        Ok((l_decrease(prev, base, pass.scheme)?, Branch::Decrease))
    }
}

pub fn step_pass(
    table: &mut IterateTable,
    pass: &mut PassState,
    schedule: &BaseSchedule,
    t: &Transition,
) -> Result<StepReport> {
    let base = visit(table, schedule, t)?;
    let same_sign = pass.last_residual(t.state).is_some_and(|last| t.residual * last >= 0.0);
    let (rate, branch) = pass_rate(pass, t.state, base, same_sign)?;
    table.apply_update(t.state, rate, t.residual)?;
    pass.set(t.state, rate, t.residual);
    Ok(StepReport {
        state: t.state,
        rate_used: rate,
        residual: t.residual,
        branch: Some(branch),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorStepReport {
    pub branch: Branch,
    pub inner_product: f64,
    /// Rate used per coordinate (0 outside the support).
    pub rates: Vec<f64>,
}

/// Vectorial PASS. `base_rates[z] = 0` removes `z` from this step's support.
pub fn step_pass_vectorial(
    table: &mut IterateTable,
    pass: &mut PassState,
    base_rates: &[f64],
    residuals: &[f64],
    step: u64,
) -> Result<VectorStepReport> {
    let n = table.len();
    for len in [base_rates.len(), residuals.len(), pass.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    if let Some(&r) = residuals.iter().find(|r| !r.is_finite()) {
        return Err(Error::NonFinite {
            what: "residual",
            step,
            value: r,
        });
    }
    let current_rate = |z: StateIndex| {
        if base_rates[z.0] <= 0.0 {
            0.0
        } else if pass.last_residual(z).is_none() {
            base_rates[z.0]
        } else {
            pass.gamma_hat(z)
        }
    };
    let inner: f64 = (0..n)
        .map(StateIndex)
        .map(|z| current_rate(z) * residuals[z.0] * pass.previous_vector()[z.0])
        .sum();
    let same_sign = inner >= 0.0;
    let mut rates = vec![0.0; n];
    let mut all_first = true;
    for z in (0..n).map(StateIndex) {
        if base_rates[z.0] <= 0.0 {
            continue;
        }
        table.record_visit(z, step)?;
        let (rate, b) = pass_rate(pass, z, base_rates[z.0], same_sign)?;
        all_first &= b == Branch::FirstVisit;
        table.apply_update(z, rate, residuals[z.0])?;
        pass.set(z, rate, residuals[z.0]);
        rates[z.0] = rate;
    }
    pass.set_previous_vector(residuals);
    let branch = if all_first {
        Branch::FirstVisit
    } else if same_sign {
        Branch::Increase
    } else {
        Branch::Decrease
    };
    Ok(VectorStepReport {
        branch,
        inner_product: inner,
        rates,
    })
}

/// Everything one Monte-Carlo path owns: iterate, schedule, algorithm state.
#[derive(Debug, Clone)]
pub struct Learner {
    algorithm: Algorithm,
    table: IterateTable,
    schedule: BaseSchedule,
    pass: PassState,
    saga: SagaMemory,
    last_residual: Vec<Option<f64>>,
    step: u64,
    episode: u64,
    used_rate_sum: f64,
    base_rate_sum: f64,
}

impl Learner {
    pub fn new(
        algorithm: Algorithm,
        table: IterateTable,
        schedule: BaseSchedule,
        scheme: HlScheme,
        saga_depth: usize,
    ) -> Result<Self> {
        let n = table.len();
        if schedule.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: schedule.len(),
            });
        }
        let depth = if algorithm == Algorithm::Saga { saga_depth } else { 1 };
        Ok(Self {
            algorithm,
            saga: SagaMemory::new(n, depth)?,
            pass: PassState::new(n, scheme),
            last_residual: vec![None; n],
            table,
            schedule,
            step: 0,
            episode: 0,
            used_rate_sum: 0.0,
            base_rate_sum: 0.0,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn table(&self) -> &IterateTable {
        &self.table
    }

    /// Mutable access for boundary conditions (rows that are never learned).
    pub fn table_mut(&mut self) -> &mut IterateTable {
        &mut self.table
    }

    pub fn schedule(&self) -> &BaseSchedule {
        &self.schedule
    }

    pub fn pass(&self) -> &PassState {
        &self.pass
    }

    pub fn saga(&self) -> &SagaMemory {
        &self.saga
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn episodes(&self) -> u64 {
        self.episode
    }

    /// `(Σ used rates, Σ base rates)` over all steps so far.
    pub fn rate_sums(&self) -> (f64, f64) {
        (self.used_rate_sum, self.base_rate_sum)
    }

    pub fn value(&self, z: StateIndex) -> f64 {
        self.table.value(z)
    }

    /// Apply one scalar observation at `z`.
    pub fn observe<R: Rng + ?Sized>(&mut self, z: StateIndex, residual: f64, rng: &mut R) -> Result<StepReport> {
        let t = Transition::new(z, residual, self.step, self.episode)?;
        self.table.check(z)?;
        let report = match self.algorithm {
            Algorithm::Rl => step_rl(&mut self.table, &self.schedule, &t)?,
            Algorithm::Saga => step_saga(&mut self.table, &mut self.saga, &self.schedule, &t, rng)?,
            Algorithm::Pass => step_pass(&mut self.table, &mut self.pass, &self.schedule, &t)?,
            Algorithm::PassVectorial => {
                return Err(Error::param(
                    "algorithm",
                    "pass_vec consumes full residual vectors; use observe_vector",
                ))
            }
        };
        self.used_rate_sum += report.rate_used;
        self.base_rate_sum += self.schedule.rate(z, self.table.visits(z));
        self.after(z, residual);
        self.step += 1;
        Ok(report)
    }

    /// Apply one full residual vector (vectorial PASS only).
    pub fn observe_vector(&mut self, residuals: &[f64]) -> Result<VectorStepReport> {
        if self.algorithm != Algorithm::PassVectorial {
            return Err(Error::param("algorithm", "observe_vector requires pass_vec"));
        }
        let n = self.table.len();
        let base: Vec<f64> = (0..n)
            .map(StateIndex)
            .map(|z| self.schedule.rate(z, self.table.visits(z) + 1))
            .collect();
        let report = step_pass_vectorial(&mut self.table, &mut self.pass, &base, residuals, self.step)?;
        self.used_rate_sum += report.rates.iter().sum::<f64>();
        self.base_rate_sum += base.iter().sum::<f64>();
        for (z, &r) in residuals.iter().enumerate() {
            self.after(StateIndex(z), r);
        }
        self.step += 1;
        Ok(report)
    }

    fn after(&mut self, z: StateIndex, residual: f64) {
        self.last_residual[z.0] = Some(residual);
        self.schedule.observe(z, residual);
    }

    /// Euclidean norm of the last residual stored at every state.
    pub fn residual_norm(&self) -> f64 {
        self.last_residual
            .iter()
            .map(|r| r.unwrap_or(0.0).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Close an episode: feed the residual norm to the outer policy.
    pub fn end_episode(&mut self) -> f64 {
        let norm = self.residual_norm();
        self.schedule.end_episode(norm);
        self.episode += 1;
        norm
    }
}
