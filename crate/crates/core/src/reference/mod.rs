//! Exact solutions used as `q*` by the harness.

mod execution;
mod stopping;

pub use execution::{execution_bellman_residual, solve_execution_reference};
pub use stopping::{
    learned_placement_control, placement_bellman_residual, placement_control_agreement, solve_placement_reference,
    StoppingProblem, StoppingSolution, Successor,
};

use crate::algorithms::SagaMemory;
use crate::engine::{IterateTable, StateIndex};
use crate::env::DriftModel;
use crate::error::{Error, Result};

/// `q*` (or `v̄`) on the learner's index space plus the optimal control of
/// each decision state.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTable {
    pub values: Vec<f64>,
    /// Indexed by decision state; `None` where no decision is taken.
    pub control: Vec<Option<usize>>,
    /// Weights ν used by [`l2_gap`]; uniform over `values` by default.
    pub weights: Vec<f64>,
}

impl ReferenceTable {
    pub fn uniform(values: Vec<f64>, control: Vec<Option<usize>>) -> Self {
        let n = values.len();
        Self {
            weights: vec![1.0 / n as f64; n],
            values,
            control,
        }
    }
}

pub fn solve_drift_reference(model: &DriftModel) -> ReferenceTable {
    ReferenceTable::uniform(model.f.clone(), vec![None; model.f.len()])
}

/// `Σ_z ν_z (q(z) − q*(z))²`.
pub fn l2_gap(table: &IterateTable, reference: &ReferenceTable) -> Result<f64> {
    let q = table.values();
    if q.len() != reference.values.len() || reference.weights.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: reference.values.len(),
            got: q.len(),
        });
    }
    Ok(q.iter()
        .zip(&reference.values)
        .zip(&reference.weights)
        .map(|((a, b), w)| w * (a - b).powi(2))
        .sum())
}

/// SAGA error: `Σ_z ν_z [c(q − q*)² + (1/M) Σ_j (M[z, j] − m*(z))²]`, where
/// `m*(z)` is a per-state reference residual (the residual at `q*`, whose
/// mean is zero; pass zeros for the deterministic part).
pub fn l2_gap_saga(
    table: &IterateTable,
    memory: &SagaMemory,
    reference: &ReferenceTable,
    m_star: &[f64],
    c: f64,
) -> Result<f64> {
    let base = l2_gap(table, reference)?;
    if m_star.len() != table.len() {
        return Err(Error::DimensionMismatch {
            expected: table.len(),
            got: m_star.len(),
        });
    }
    let memory_term: f64 = (0..table.len())
        .map(|z| {
            let slots = memory.slots(StateIndex(z));
            let mean_sq = slots.iter().map(|s| (s - m_star[z]).powi(2)).sum::<f64>() / slots.len() as f64;
            reference.weights[z] * mean_sq
        })
        .sum();
    Ok(c * base + memory_term)
}
