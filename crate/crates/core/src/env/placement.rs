//! Limit-order placement on a discrete Markov book.
//!
//! An agent holds one buy limit order with `q_before` shares ahead of it and
//! `q_after` behind; `q_opp` is the opposite best queue. At each step it may
//! cross the spread (cost ψ, relative to the current price) or stay and pay
//! `c`. While it stays, exactly one book event happens:
//!
//! | event              | effect                                                   |
//! |--------------------|----------------------------------------------------------|
//! | market order       | `q_before − 1`, or our order fills if `q_before = 0` (cost 0) |
//! | same-side cancel   | uniform over the resting shares: ahead or behind us       |
//! | same-side arrival  | `q_after + 1` (capped)                                    |
//! | opposite arrival   | `q_opp + 1` (capped)                                      |
//! | opposite depletion | `q_opp − 1`; at `q_opp = 1` the price moves away and we  |
//! |                    | must cross one tick higher: cost `ψ + penalty`            |
//! | nothing            | remaining probability                                     |
//!
//! At the horizon `T` the order is crossed. Costs are minimised.
//!
//! State encoding: decision time `t ∈ 0..T`, a cell `(q_before, q_after)`
//! with `q_before + q_after ≤ q_max`, and `q_opp ∈ 1..=opp_max`;
//! `id = (t·cells + cell)·opp_max + (q_opp − 1)`, `q`-index `= 2·id + action`.

use rand::Rng;

use super::EpisodeTrace;
use crate::algorithms::Learner;
use crate::engine::{IterateTable, StateIndex};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LobState {
    pub q_before: usize,
    pub q_after: usize,
    pub q_opp: usize,
}

impl LobState {
    pub fn q_same(&self) -> usize {
        self.q_before + self.q_after
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LobAction {
    Cross = 0,
    Stay = 1,
}

impl LobAction {
    pub const BOTH: [LobAction; 2] = [LobAction::Cross, LobAction::Stay];
}

impl TryFrom<u8> for LobAction {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(LobAction::Cross),
            1 => Ok(LobAction::Stay),
            other => Err(Error::param(
                "action",
                format!("expected 0 (cross) or 1 (stay), got {other}"),
            )),
        }
    }
}

/// Where a step leads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Next {
    Continue(LobState),
    /// Episode over with this terminal cost.
    Done(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementModel {
    pub q_max: usize,
    pub opp_max: usize,
    pub opp_init: usize,
    pub horizon: usize,
    pub p_market: f64,
    pub p_cancel: f64,
    pub p_arrival: f64,
    pub p_opp_arrival: f64,
    pub p_opp_depletion: f64,
    pub spread_psi: f64,
    pub wait_cost_c: f64,
    pub move_penalty: f64,
}

impl Default for PlacementModel {
    fn default() -> Self {
        Self {
            q_max: 4,
            opp_max: 3,
            opp_init: 2,
            horizon: 4,
            p_market: 0.25,
            p_cancel: 0.15,
            p_arrival: 0.2,
            p_opp_arrival: 0.15,
            p_opp_depletion: 0.1,
            spread_psi: 1.0,
            wait_cost_c: 0.08,
            move_penalty: 1.0,
        }
    }
}

impl PlacementModel {
    pub fn validate(&self) -> Result<()> {
        if self.opp_max == 0 || !(1..=self.opp_max).contains(&self.opp_init) {
            return Err(Error::param("opp_init", "need 1 <= opp_init <= opp_max"));
        }
        if self.horizon == 0 {
            return Err(Error::param("horizon", "must be positive"));
        }
        let probs = [
            self.p_market,
            self.p_cancel,
            self.p_arrival,
            self.p_opp_arrival,
            self.p_opp_depletion,
        ];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) || probs.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(Error::param(
                "p_*",
                "event probabilities must be in [0, 1] and sum to <= 1",
            ));
        }
        for (name, v) in [
            ("spread", self.spread_psi),
            ("wait_cost", self.wait_cost_c),
            ("move_penalty", self.move_penalty),
        ] {
            if !(v >= 0.0) {
                return Err(Error::param(name, "must be >= 0"));
            }
        }
        Ok(())
    }

    /// Number of `(q_before, q_after)` cells.
    pub fn cells(&self) -> usize {
        (self.q_max + 1) * (self.q_max + 2) / 2
    }

    pub fn cell_index(&self, q_before: usize, q_after: usize) -> usize {
        // cells ordered by q_same, then q_before
        let s = q_before + q_after;
        s * (s + 1) / 2 + q_before
    }

    pub fn cell(&self, index: usize) -> (usize, usize) {
        let mut s = 0;
        while (s + 1) * (s + 2) / 2 <= index {
            s += 1;
        }
        let qb = index - s * (s + 1) / 2;
        (qb, s - qb)
    }

    pub fn states_per_time(&self) -> usize {
        self.cells() * self.opp_max
    }

    /// Decision states over all times.
    pub fn n_states(&self) -> usize {
        self.horizon * self.states_per_time()
    }

    pub fn n_q(&self) -> usize {
        2 * self.n_states()
    }

    pub fn contains(&self, s: &LobState) -> bool {
        s.q_same() <= self.q_max && (1..=self.opp_max).contains(&s.q_opp)
    }

    pub fn encode(&self, t: usize, s: &LobState) -> Result<StateIndex> {
        if t >= self.horizon || !self.contains(s) {
            return Err(Error::param("state", format!("({t}, {s:?}) is off the grid")));
        }
        Ok(StateIndex(
            (t * self.cells() + self.cell_index(s.q_before, s.q_after)) * self.opp_max + s.q_opp - 1,
        ))
    }

    pub fn decode(&self, z: StateIndex) -> (usize, LobState) {
        let q_opp = z.0 % self.opp_max + 1;
        let rest = z.0 / self.opp_max;
        let (q_before, q_after) = self.cell(rest % self.cells());
        (
            rest / self.cells(),
            LobState {
                q_before,
                q_after,
                q_opp,
            },
        )
    }

    pub fn q_index(&self, z: StateIndex, a: LobAction) -> StateIndex {
        StateIndex(2 * z.0 + a as usize)
    }

    /// Exact one-step kernel under "stay"; probabilities sum to 1.
    pub fn stay_kernel(&self, s: &LobState) -> Vec<(f64, Next)> {
        let mut out = Vec::with_capacity(8);
        let same = Next::Continue(*s);
        let with = |f: &dyn Fn(&mut LobState)| {
            let mut n = *s;
            f(&mut n);
            Next::Continue(n)
        };
        // market order
        out.push((
            self.p_market,
            if s.q_before == 0 {
                Next::Done(0.0)
            } else {
                with(&|n| n.q_before -= 1)
            },
        ));
        // cancel among resting shares
        let resting = s.q_same();
        if resting == 0 {
            out.push((self.p_cancel, same));
        } else {
            let ahead = s.q_before as f64 / resting as f64;
            if s.q_before > 0 {
                out.push((self.p_cancel * ahead, with(&|n| n.q_before -= 1)));
            }
            if s.q_after > 0 {
                out.push((self.p_cancel * (1.0 - ahead), with(&|n| n.q_after -= 1)));
            }
        }
        out.push((
            self.p_arrival,
            if resting < self.q_max {
                with(&|n| n.q_after += 1)
            } else {
                same
            },
        ));
        out.push((
            self.p_opp_arrival,
            if s.q_opp < self.opp_max {
                with(&|n| n.q_opp += 1)
            } else {
                same
            },
        ));
        out.push((
            self.p_opp_depletion,
            if s.q_opp == 1 {
                Next::Done(self.spread_psi + self.move_penalty)
            } else {
                with(&|n| n.q_opp -= 1)
            },
        ));
        let used: f64 = out.iter().map(|(p, _)| p).sum();
        out.push((1.0 - used, same));
        out.retain(|(p, _)| *p > 0.0);
        out
    }
}

/// One step from a non-terminal state: `(next, immediate cost)`.
pub fn lob_transition<R: Rng + ?Sized>(
    model: &PlacementModel,
    state: &LobState,
    action: u8,
    rng: &mut R,
) -> Result<(Next, f64)> {
    if !model.contains(state) {
        return Err(Error::param("state", format!("{state:?} is off the grid")));
    }
    match LobAction::try_from(action)? {
        LobAction::Cross => Ok((Next::Done(model.spread_psi), 0.0)),
        LobAction::Stay => {
            let kernel = model.stay_kernel(state);
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (p, next) in &kernel {
                acc += p;
                if u < acc {
                    return Ok((*next, model.wait_cost_c));
                }
            }
            Ok((kernel.last().expect("non-empty kernel").1, model.wait_cost_c))
        }
    }
}

/// `q(s, a) − [cost + best continuation]`. For `cross` the continuation is the
/// known terminal cost ψ, so no order needs to be sent to evaluate it.
pub fn placement_residual(
    q: &IterateTable,
    model: &PlacementModel,
    t: usize,
    state: &LobState,
    action: LobAction,
    next: Next,
    cost: f64,
) -> Result<f64> {
    let z = model.encode(t, state)?;
    let current = q.value(model.q_index(z, action));
    let target = match action {
        LobAction::Cross => model.spread_psi,
        LobAction::Stay => {
            cost + match next {
                Next::Done(payoff) => payoff,
                Next::Continue(_) if t + 1 >= model.horizon => model.spread_psi,
                Next::Continue(n) => {
                    let zn = model.encode(t + 1, &n)?;
                    LobAction::BOTH
                        .iter()
                        .map(|&a| q.value(model.q_index(zn, a)))
                        .fold(f64::INFINITY, f64::min)
                }
            }
        }
    };
    Ok(current - target)
}

/// Runs one episode from a uniformly drawn `(q_before, q_after)` cell at
/// `q_opp = opp_init`. The behaviour policy always stays; both actions are
/// updated at every visited state.
pub fn placement_episode<R: Rng + ?Sized>(
    model: &PlacementModel,
    learner: &mut Learner,
    rng: &mut R,
) -> Result<EpisodeTrace> {
    if learner.table().len() != model.n_q() {
        return Err(Error::DimensionMismatch {
            expected: model.n_q(),
            got: learner.table().len(),
        });
    }
    let (q_before, q_after) = model.cell(rng.random_range(0..model.cells()));
    let mut state = LobState {
        q_before,
        q_after,
        q_opp: model.opp_init,
    };
    let mut steps = 0;
    for t in 0..model.horizon {
        let z = model.encode(t, &state)?;
        let m_cross = placement_residual(
            learner.table(),
            model,
            t,
            &state,
            LobAction::Cross,
            Next::Done(model.spread_psi),
            0.0,
        )?;
        learner.observe(model.q_index(z, LobAction::Cross), m_cross, rng)?;
        let (next, cost) = lob_transition(model, &state, LobAction::Stay as u8, rng)?;
        let m_stay = placement_residual(learner.table(), model, t, &state, LobAction::Stay, next, cost)?;
        learner.observe(model.q_index(z, LobAction::Stay), m_stay, rng)?;
        steps += 2;
        match next {
            Next::Continue(n) => state = n,
            Next::Done(_) => break,
        }
    }
    Ok(EpisodeTrace {
        steps,
        error_norm: learner.end_episode(),
    })
}
