//! Gap between optimising after and before the noise in one execution step.
//!
//! `M(ν) = −κΔν² + ν(ΔΔS − ΔS̄) + qΔS` is concave in `ν`, so
//! `sup_ν M = Y²/(4κΔ) + qΔS` with `Y = ΔΔS − ΔS̄`, and
//! `E[sup M] − sup E[M] = Var(Y)/(4κΔ) = σ²Δ²/(12κ)`.
//!
//! The estimator averages `sup_ν M_i − M_i(ν*)` where `ν*` maximises `E[M]`;
//! since `E[M(ν*)] = sup E[M]` this is unbiased and the `qΔS` term cancels
//! draw by draw.

use rand::Rng;

use crate::env::ExecModel;
use crate::error::{Error, Result};

/// Maximiser of the concave quadratic `−κΔν² + ν·y`.
pub fn best_speed(model: &ExecModel, y: f64) -> f64 {
    y / (2.0 * model.kappa * model.dt())
}

/// `sup_ν E[M] = α²Δ³/(16κ) + αqΔ`.
pub fn sup_expected_gain(model: &ExecModel, q: f64) -> f64 {
    let dt = model.dt();
    model.alpha.powi(2) * dt.powi(3) / (16.0 * model.kappa) + model.alpha * q * dt
}

pub fn theoretical_gap(model: &ExecModel) -> f64 {
    model.sigma.powi(2) * model.dt().powi(2) / (12.0 * model.kappa)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub theory: f64,
}

pub fn jensen_gap<R: Rng + ?Sized>(model: &ExecModel, q: f64, draws: usize, rng: &mut R) -> Result<GapEstimate> {
    if draws < 2 {
        return Err(Error::param("draws", "need at least two draws"));
    }
    let dt = model.dt();
    let nu_star = best_speed(model, model.alpha * dt * dt / 2.0);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..draws {
        let (ds, ds_bar) = model.sample_increments(rng);
        let nu = best_speed(model, dt * ds - ds_bar);
        let d = model.realized_gain(nu, q, ds, ds_bar) - model.realized_gain(nu_star, q, ds, ds_bar);
        sum += d;
        sum_sq += d * d;
    }
    let n = draws as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean) * n / (n - 1.0);
    Ok(GapEstimate {
        mean,
        stderr: (var / n).sqrt(),
        theory: theoretical_gap(model),
    })
}
