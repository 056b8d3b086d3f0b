//! Finite-horizon optimal stopping by backward induction, and the placement
//! problem expressed as one.

use super::ReferenceTable;
use crate::env::placement::{LobAction, LobState, Next, PlacementModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Successor {
    State(usize),
    /// Absorbed with this terminal cost.
    Absorb(f64),
}

/// Minimise cost: at each `t < horizon` either stop (pay `stop_cost[s]`) or
/// wait (pay `wait_cost`, move by `kernel[s]`); at `horizon` stopping is forced.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingProblem {
    pub horizon: usize,
    pub stop_cost: Vec<f64>,
    pub wait_cost: f64,
    pub kernel: Vec<Vec<(f64, Successor)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingSolution {
    pub n_states: usize,
    /// `[t·n + s]` for `t < horizon`.
    pub q_stop: Vec<f64>,
    pub q_wait: Vec<f64>,
    /// `[t·n + s]` for `t ≤ horizon`.
    pub value: Vec<f64>,
    /// 0 = stop, 1 = wait; ties stop.
    pub control: Vec<usize>,
}

impl StoppingProblem {
    pub fn validate(&self) -> Result<()> {
        let n = self.stop_cost.len();
        if self.kernel.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.kernel.len(),
            });
        }
        for (row, k) in self.kernel.iter().enumerate() {
            let sum: f64 = k.iter().map(|(p, _)| p).sum();
            if k.iter().any(|(p, _)| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
                return Err(Error::NonStochastic { row, sum });
            }
            if let Some(bad) = k.iter().find_map(|(_, s)| match s {
                Successor::State(j) if *j >= n => Some(*j),
                _ => None,
            }) {
                return Err(Error::InvalidState { index: bad, size: n });
            }
        }
        Ok(())
    }

    fn expected_wait(&self, s: usize, next_value: &[f64]) -> f64 {
        self.wait_cost
            + self.kernel[s]
                .iter()
                .map(|(p, succ)| {
                    p * match *succ {
                        Successor::State(j) => next_value[j],
                        Successor::Absorb(c) => c,
                    }
                })
                .sum::<f64>()
    }

    pub fn solve(&self) -> Result<StoppingSolution> {
        self.validate()?;
        let n = self.stop_cost.len();
        let h = self.horizon;
        let mut value = vec![0.0; (h + 1) * n];
        value[h * n..].copy_from_slice(&self.stop_cost);
        let mut q_stop = vec![0.0; h * n];
        let mut q_wait = vec![0.0; h * n];
        let mut control = vec![0; h * n];
        for t in (0..h).rev() {
            let (now, next) = value.split_at_mut((t + 1) * n);
            let next = &next[..n];
            for s in 0..n {
                let stop = self.stop_cost[s];
                let wait = self.expected_wait(s, next);
                q_stop[t * n + s] = stop;
                q_wait[t * n + s] = wait;
                let stay = wait < stop;
                control[t * n + s] = usize::from(stay);
                now[t * n + s] = if stay { wait } else { stop };
            }
        }
        Ok(StoppingSolution {
            n_states: n,
            q_stop,
            q_wait,
            value,
            control,
        })
    }
}

/// The placement model as a stopping problem over one time slice.
pub fn placement_stopping_problem(model: &PlacementModel) -> Result<StoppingProblem> {
    model.validate()?;
    let n = model.states_per_time();
    let kernel = (0..n)
        .map(|s| {
            let (_, state) = model.decode(crate::engine::StateIndex(s));
            model
                .stay_kernel(&state)
                .into_iter()
                .map(|(p, next)| {
                    let succ = match next {
                        Next::Done(c) => Successor::Absorb(c),
                        Next::Continue(ns) => Successor::State(model.encode(0, &ns).map(|z| z.0)?),
                    };
                    Ok((p, succ))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StoppingProblem {
        horizon: model.horizon,
        stop_cost: vec![model.spread_psi; n],
        wait_cost: model.wait_cost_c,
        kernel,
    })
}

/// `q*` on the learner's `(state, action)` index space; control per state
/// (0 = cross, 1 = stay).
pub fn solve_placement_reference(model: &PlacementModel) -> Result<ReferenceTable> {
    let sol = placement_stopping_problem(model)?.solve()?;
    let mut values = vec![0.0; model.n_q()];
    for id in 0..model.n_states() {
        values[2 * id + LobAction::Cross as usize] = sol.q_stop[id];
        values[2 * id + LobAction::Stay as usize] = sol.q_wait[id];
    }
    let control = sol.control.iter().map(|&c| Some(c)).collect();
    Ok(ReferenceTable::uniform(values, control))
}

/// Greedy control of a learned `q` table at decision state `id`
/// (0 = cross, 1 = stay; ties cross).
pub fn learned_placement_control(values: &[f64], id: usize) -> usize {
    if values[2 * id + 1] < values[2 * id] {
        1
    } else {
        0
    }
}

/// Fraction of `(q_before, q_after)` cells at `t = 0`, `q_opp = opp_init`
/// where the learned control matches the reference.
pub fn placement_control_agreement(model: &PlacementModel, values: &[f64], reference: &ReferenceTable) -> Result<f64> {
    if values.len() != model.n_q() {
        return Err(Error::DimensionMismatch {
            expected: model.n_q(),
            got: values.len(),
        });
    }
    let mut agree = 0usize;
    for c in 0..model.cells() {
        let (q_before, q_after) = model.cell(c);
        let id = model
            .encode(
                0,
                &LobState {
                    q_before,
                    q_after,
                    q_opp: model.opp_init,
                },
            )?
            .0;
        if reference.control[id] == Some(learned_placement_control(values, id)) {
            agree += 1;
        }
    }
    Ok(agree as f64 / model.cells() as f64)
}

/// Largest Bellman-equation violation of a placement `q` table.
pub fn placement_bellman_residual(model: &PlacementModel, reference: &ReferenceTable) -> Result<f64> {
    let problem = placement_stopping_problem(model)?;
    let n = problem.stop_cost.len();
    let v = &reference.values;
    if v.len() != model.n_q() {
        return Err(Error::DimensionMismatch {
            expected: model.n_q(),
            got: v.len(),
        });
    }
    let best = |t: usize, s: usize| {
        if t == model.horizon {
            model.spread_psi
        } else {
            let id = t * n + s;
            v[2 * id].min(v[2 * id + 1])
        }
    };
    let mut worst: f64 = 0.0;
    for t in 0..model.horizon {
        let next: Vec<f64> = (0..n).map(|s| best(t + 1, s)).collect();
        for s in 0..n {
            let id = t * n + s;
            worst = worst
                .max((v[2 * id] - problem.stop_cost[s]).abs())
                .max((v[2 * id + 1] - problem.expected_wait(s, &next)).abs());
        }
    }
    Ok(worst)
}
