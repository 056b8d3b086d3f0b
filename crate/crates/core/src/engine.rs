//! Iterate storage and the one-coordinate update.
//!
//! Every algorithm reduces to `q(z) ← q(z) − rate·m` at the visited state;
//! nothing else in the table moves. Environments own the bijection between
//! their structured states and [`StateIndex`].

use rand::Rng;

use crate::error::{Error, Result};

/// Flat index of a state in a finite state space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateIndex(pub usize);

impl StateIndex {
    pub fn get(self) -> usize {
        self.0
    }
}

impl From<usize> for StateIndex {
    fn from(v: usize) -> Self {
        StateIndex(v)
    }
}

/// The current estimate `q` plus per-state visit statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateTable {
    values: Vec<f64>,
    visits: Vec<u64>,
    last_visit: Vec<Option<u64>>,
}

impl IterateTable {
    pub fn new(size: usize, init: f64) -> Self {
        Self::from_values(vec![init; size])
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len();
        Self {
            values,
            visits: vec![0; n],
            last_visit: vec![None; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, z: StateIndex) -> f64 {
        self.values[z.0]
    }

    pub fn visits(&self, z: StateIndex) -> u64 {
        self.visits[z.0]
    }

    pub fn last_visit_step(&self, z: StateIndex) -> Option<u64> {
        self.last_visit[z.0]
    }

    pub fn check(&self, z: StateIndex) -> Result<()> {
        if z.0 < self.values.len() {
            Ok(())
        } else {
            Err(Error::InvalidState {
                index: z.0,
                size: self.values.len(),
            })
        }
    }

    /// Overwrite a coordinate without counting a visit (boundary rows,
    /// initial conditions).
    pub fn set(&mut self, z: StateIndex, value: f64) -> Result<()> {
        self.check(z)?;
        self.values[z.0] = value;
        Ok(())
    }

    pub fn record_visit(&mut self, z: StateIndex, step: u64) -> Result<()> {
        self.check(z)?;
        self.visits[z.0] += 1;
        self.last_visit[z.0] = Some(step);
        Ok(())
    }

    /// `q(z) ← q(z) − rate·residual`; all other coordinates are untouched.
    pub fn apply_update(&mut self, z: StateIndex, rate: f64, residual: f64) -> Result<()> {
        self.check(z)?;
        let step = self.last_visit[z.0].unwrap_or(0);
        if !rate.is_finite() {
            return Err(Error::NonFinite {
                what: "rate",
                step,
                value: rate,
            });
        }
        if rate < 0.0 {
            return Err(Error::param("rate", format!("must be >= 0, got {rate}")));
        }
        if !residual.is_finite() {
            return Err(Error::NonFinite {
                what: "residual",
                step,
                value: residual,
            });
        }
        if rate == 0.0 {
            return Ok(());
        }
        let next = self.values[z.0] - rate * residual;
        if !next.is_finite() {
            return Err(Error::NonFinite {
                what: "iterate",
                step,
                value: next,
            });
        }
        self.values[z.0] = next;
        Ok(())
    }
}

/// One observed tuple `(Z_n, m(q_n, X_{n+1}, Z_n))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: StateIndex,
    pub residual: f64,
    pub step: u64,
    pub episode: u64,
}

impl Transition {
    pub fn new(state: StateIndex, residual: f64, step: u64, episode: u64) -> Result<Self> {
        if !residual.is_finite() {
            return Err(Error::NonFinite {
                what: "residual",
                step,
                value: residual,
            });
        }
        Ok(Self {
            state,
            residual,
            step,
            episode,
        })
    }
}

/// Draws one sample at `z` and returns the residual under the current table.
pub trait ResidualOracle {
    fn residual<R: Rng + ?Sized>(&mut self, table: &IterateTable, z: StateIndex, rng: &mut R) -> f64;
}
