//! Deterministic dynamic programme for the execution grid:
//! `v̄(n_t, q_i) = max_j [E M(ν_ij, q_i) − φΔq_i² + v̄(n_t + 1, q_j)]`,
//! `v̄(k_T, q) = −A q²`. The maximisation runs over the learner's own grid.

use super::ReferenceTable;
use crate::env::ExecModel;
use crate::error::{Error, Result};

fn best_target(model: &ExecModel, values: &[f64], n_t: usize, i: usize) -> (usize, f64) {
    let q = model.inventory(i);
    (0..model.n_inventory())
        .map(|j| {
            let gain = model.expected_gain(model.speed(i, j), q) - model.running_penalty(q)
                + values[model.index(n_t + 1, j).0];
            (j, gain)
        })
        .fold(
            (0, f64::NEG_INFINITY),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        )
}

pub fn solve_execution_reference(model: &ExecModel) -> Result<ReferenceTable> {
    model.validate()?;
    let mut values = model.initial_table().values().to_vec();
    let mut control = vec![None; model.n_states()];
    for n_t in (0..model.k_t).rev() {
        for i in 0..model.n_inventory() {
            let (j, v) = best_target(model, &values, n_t, i);
            let z = model.index(n_t, i).0;
            values[z] = v;
            control[z] = Some(j);
        }
    }
    // the terminal row is boundary data, not learned: weight only decision states
    let live = (model.k_t * model.n_inventory()) as f64;
    let weights = (0..model.n_states())
        .map(|z| if control[z].is_some() { 1.0 / live } else { 0.0 })
        .collect();
    Ok(ReferenceTable {
        values,
        control,
        weights,
    })
}

/// Largest violation of the DPP (including the terminal condition).
pub fn execution_bellman_residual(model: &ExecModel, reference: &ReferenceTable) -> Result<f64> {
    let v = &reference.values;
    if v.len() != model.n_states() {
        return Err(Error::DimensionMismatch {
            expected: model.n_states(),
            got: v.len(),
        });
    }
    let mut worst: f64 = 0.0;
    for i in 0..model.n_inventory() {
        worst = worst.max((v[model.index(model.k_t, i).0] - model.terminal_value(i)).abs());
    }
    for n_t in 0..model.k_t {
        for i in 0..model.n_inventory() {
            let (_, best) = best_target(model, v, n_t, i);
            worst = worst.max((v[model.index(n_t, i).0] - best).abs());
        }
    }
    Ok(worst)
}
