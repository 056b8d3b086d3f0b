//! Step-size machinery.
//!
//! Two levels: a *base* rate γ°(z) chosen by a schedule (constant, `η/n^α`,
//! piecewise-constant, or the error-model optimum), and the PASS *inner*
//! rate γ̂(z) which moves inside `[γ°, 3γ°]` according to residual signs.

use std::collections::VecDeque;

use crate::engine::StateIndex;
use crate::error::{Error, Result};

/// Ratio `r₁` bounding `h(γ̂, γ°) ≤ r₁·γ°`.
pub const PASS_RATIO: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HlScheme {
    /// `h = min(γ̂ + γ°, 3γ°)`, `l = max(γ̂ − γ°, γ°)`.
    #[default]
    Additive,
    /// Steps of `2γ°/3` instead of `γ°`.
    TwoThirds,
}

impl HlScheme {
    fn step(self, base: f64) -> f64 {
        match self {
            HlScheme::Additive => base,
            HlScheme::TwoThirds => 2.0 * base / 3.0,
        }
    }
}

fn check_rates(gamma_hat: f64, gamma_base: f64) -> Result<()> {
    if !(gamma_base > 0.0) || !gamma_base.is_finite() {
        return Err(Error::param("gamma_base", format!("must be > 0, got {gamma_base}")));
    }
    if !(gamma_hat >= 0.0) || !gamma_hat.is_finite() {
        return Err(Error::param("gamma_hat", format!("must be >= 0, got {gamma_hat}")));
    }
    Ok(())
}

/// Rate after a residual sign was repeated.
pub fn h_increase(gamma_hat: f64, gamma_base: f64, scheme: HlScheme) -> Result<f64> {
    check_rates(gamma_hat, gamma_base)?;
    let up = (gamma_hat + scheme.step(gamma_base)).min(PASS_RATIO * gamma_base);
    Ok(up.max(gamma_base))
}

/// Rate after a residual sign flipped.
pub fn l_decrease(gamma_hat: f64, gamma_base: f64, scheme: HlScheme) -> Result<f64> {
    check_rates(gamma_hat, gamma_base)?;
    let down = (gamma_hat - scheme.step(gamma_base)).max(gamma_base);
    Ok(down.min(PASS_RATIO * gamma_base))
}

/// `γ = (L/B)·e/(e + 2 + v)`: minimiser of `(1 − 2Lγ + Bγ²)e + B(2+v)γ²`.
pub fn optimal_gamma_rl(e_proxy: f64, l: f64, b: f64, v: f64) -> f64 {
    if e_proxy <= 0.0 {
        return 0.0;
    }
    (l / b) * e_proxy / (e_proxy + 2.0 + v)
}

/// PASS variant: `γ = (L/B)·e/(e + d₁/B·1{c ≥ 1} + c²(2 + v))`.
pub fn optimal_gamma_pass(e_proxy: f64, l: f64, b: f64, c: f64, d1: f64, v: f64) -> f64 {
    if e_proxy <= 0.0 {
        return 0.0;
    }
    let jump = if c >= 1.0 { d1 / b } else { 0.0 };
    (l / b) * e_proxy / (e_proxy + jump + c * c * (2.0 + v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PcMode {
    /// `γ° ← max(γ°/2, floor)`.
    #[default]
    Halve,
    /// `γ° ← max(γ° − decrement, floor)`.
    Subtract,
}

/// Non-overlapping windows of episode error norms.
#[derive(Debug, Clone, PartialEq)]
struct Windows {
    width: usize,
    current: Vec<f64>,
    previous_mean: Option<f64>,
}

/// Outcome of a completed window: `(previous mean, current mean)`.
type WindowPair = (Option<f64>, f64);

impl Windows {
    fn new(width: usize) -> Self {
        Self {
            width,
            current: Vec::with_capacity(width),
            previous_mean: None,
        }
    }

    fn push(&mut self, norm: f64) -> Option<WindowPair> {
        self.current.push(norm);
        if self.current.len() < self.width {
            return None;
        }
        let mean = self.current.iter().sum::<f64>() / self.width as f64;
        self.current.clear();
        Some((self.previous_mean.replace(mean), mean))
    }
}

/// Piecewise-constant outer policy: every `w` episodes, lower the base rate
/// unless the windowed mean error improved by at least a fraction `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PcPolicyState {
    pub window_w: usize,
    pub improvement_p: f64,
    pub floor: f64,
    pub mode: PcMode,
    pub decrement: f64,
    windows: Windows,
}

impl PcPolicyState {
    pub fn new(window_w: usize, improvement_p: f64, floor: f64, mode: PcMode) -> Result<Self> {
        if window_w == 0 {
            return Err(Error::param("w", "window must be positive"));
        }
        if !(improvement_p > 0.0 && improvement_p < 1.0) {
            return Err(Error::param("p", format!("must lie in (0, 1), got {improvement_p}")));
        }
        if !(floor > 0.0) {
            return Err(Error::param("floor", format!("must be > 0, got {floor}")));
        }
        Ok(Self {
            window_w,
            improvement_p,
            floor,
            mode,
            decrement: 0.01,
            windows: Windows::new(window_w),
        })
    }

    /// Feed one episode error norm; true when the base rate must be lowered.
    pub fn record(&mut self, episode_error_norm: f64) -> bool {
        match self.windows.push(episode_error_norm) {
            Some((Some(prev), cur)) => cur > (1.0 - self.improvement_p) * prev,
            _ => false,
        }
    }

    pub fn lower(&self, gamma: f64) -> f64 {
        let next = match self.mode {
            PcMode::Halve => gamma / 2.0,
            PcMode::Subtract => gamma - self.decrement,
        };
        next.max(self.floor)
    }

    /// One end-of-episode update applied to a single base rate.
    pub fn pc_update(&mut self, gamma: f64, episode_error_norm: f64) -> f64 {
        if self.record(episode_error_norm) {
            self.lower(gamma)
        } else {
            gamma
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProxyMode {
    /// `e ≈ (mean of window)²`.
    #[default]
    SquaredMean,
    /// `e ≈ mean of squared residuals`.
    MeanOfSquares,
}

/// Online `(L, B)` estimates with per-state residual windows.
#[derive(Debug, Clone, PartialEq)]
pub struct LbEstimate {
    pub l: f64,
    pub b: f64,
    pub kappa_up: f64,
    pub p_window: usize,
    pub proxy: ProxyMode,
    residuals: Vec<VecDeque<f64>>,
}

impl LbEstimate {
    pub fn new(states: usize, l: f64, b: f64, kappa_up: f64, p_window: usize) -> Result<Self> {
        if !(l > 0.0 && b > 0.0 && l <= b) {
            return Err(Error::param("L,B", format!("need 0 < L <= B, got L={l}, B={b}")));
        }
        if !(kappa_up >= 1.0) {
            return Err(Error::param("kappa_up", format!("must be >= 1, got {kappa_up}")));
        }
        if p_window == 0 {
            return Err(Error::param("proxy_window", "must be positive"));
        }
        Ok(Self {
            l,
            b,
            kappa_up,
            p_window,
            proxy: ProxyMode::SquaredMean,
            residuals: vec![VecDeque::with_capacity(p_window); states],
        })
    }

    /// Widen the constants (smaller L, larger B) after an error increase.
    pub fn adapt_lb(&mut self, error_increased: bool) {
        if error_increased {
            self.b *= self.kappa_up;
            self.l /= self.kappa_up;
        }
    }

    pub fn update_error_proxy(&mut self, z: StateIndex, residual: f64) {
        let w = &mut self.residuals[z.0];
        if w.len() == self.p_window {
            w.pop_front();
        }
        w.push_back(residual);
    }

    pub fn window(&self, z: StateIndex) -> &VecDeque<f64> {
        &self.residuals[z.0]
    }

    pub fn e_proxy(&self, z: StateIndex) -> f64 {
        let w = &self.residuals[z.0];
        if w.is_empty() {
            return 0.0;
        }
        let n = w.len() as f64;
        match self.proxy {
            ProxyMode::SquaredMean => (w.iter().sum::<f64>() / n).powi(2),
            ProxyMode::MeanOfSquares => w.iter().map(|r| r * r).sum::<f64>() / n,
        }
    }

    /// Unbiased within-window variance; 0 with fewer than two entries.
    pub fn v_estimate(&self, z: StateIndex) -> f64 {
        let w = &self.residuals[z.0];
        if w.len() < 2 {
            return 0.0;
        }
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        w.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScheduleKind {
    #[default]
    Constant,
    InversePower,
    PiecewiseConstant,
    Optimal,
}

/// The base rate γ°(z).
#[derive(Debug, Clone, PartialEq)]
pub struct BaseSchedule {
    pub kind: ScheduleKind,
    pub eta: f64,
    pub alpha_exponent: f64,
    base: Vec<f64>,
    pc: Option<PcPolicyState>,
    lb: Option<(LbEstimate, Windows, f64)>,
}

impl BaseSchedule {
    fn with_kind(kind: ScheduleKind, states: usize, eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::param("eta", format!("must be > 0, got {eta}")));
        }
        Ok(Self {
            kind,
            eta,
            alpha_exponent: 1.0,
            base: vec![eta; states],
            pc: None,
            lb: None,
        })
    }

    pub fn constant(states: usize, eta: f64) -> Result<Self> {
        Self::with_kind(ScheduleKind::Constant, states, eta)
    }

    /// `η / n(z)^α`.
    pub fn inverse_power(states: usize, eta: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::param("alpha", format!("must lie in (0, 1], got {alpha}")));
        }
        let mut s = Self::with_kind(ScheduleKind::InversePower, states, eta)?;
        s.alpha_exponent = alpha;
        Ok(s)
    }

    pub fn piecewise_constant(states: usize, eta: f64, pc: PcPolicyState) -> Result<Self> {
        if eta < pc.floor {
            return Err(Error::param("eta", "initial base rate below the PC floor"));
        }
        let mut s = Self::with_kind(ScheduleKind::PiecewiseConstant, states, eta)?;
        s.pc = Some(pc);
        Ok(s)
    }

    /// Error-model optimum with online `(L, B)`; `eta` is used until a state
    /// has a residual history, `floor` keeps γ° strictly positive.
    pub fn optimal(states: usize, eta: f64, lb: LbEstimate, window_w: usize, floor: f64) -> Result<Self> {
        if !(floor > 0.0) {
            return Err(Error::param("floor", format!("must be > 0, got {floor}")));
        }
        if window_w == 0 {
            return Err(Error::param("w", "window must be positive"));
        }
        let mut s = Self::with_kind(ScheduleKind::Optimal, states, eta)?;
        s.lb = Some((lb, Windows::new(window_w), floor));
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn pc(&self) -> Option<&PcPolicyState> {
        self.pc.as_ref()
    }

    pub fn lb(&self) -> Option<&LbEstimate> {
        self.lb.as_ref().map(|(lb, _, _)| lb)
    }

    /// Base rate at `z` given its visit count (the current visit included).
    pub fn rate(&self, z: StateIndex, visits: u64) -> f64 {
        match self.kind {
            ScheduleKind::Constant | ScheduleKind::PiecewiseConstant => self.base[z.0],
            ScheduleKind::InversePower => self.eta / (visits.max(1) as f64).powf(self.alpha_exponent),
            ScheduleKind::Optimal => {
                let (lb, _, floor) = self.lb.as_ref().expect("optimal schedule carries LB");
                if lb.window(z).is_empty() {
                    self.eta
                } else {
                    optimal_gamma_rl(lb.e_proxy(z), lb.l, lb.b, lb.v_estimate(z)).max(*floor)
                }
            }
        }
    }

    /// Lowest admissible base rate (PC floor or optimal floor), 0 otherwise.
    pub fn floor(&self) -> f64 {
        match (&self.pc, &self.lb) {
            (Some(pc), _) => pc.floor,
            (_, Some((_, _, floor))) => *floor,
            _ => 0.0,
        }
    }

    /// Per-observation hook (residual windows for the optimal schedule).
    pub fn observe(&mut self, z: StateIndex, residual: f64) {
        if let Some((lb, _, _)) = self.lb.as_mut() {
            lb.update_error_proxy(z, residual);
        }
    }

    /// End-of-episode hook; returns true when the base level changed.
    pub fn end_episode(&mut self, episode_error_norm: f64) -> bool {
        if let Some(pc) = self.pc.as_mut() {
            if pc.record(episode_error_norm) {
                for g in &mut self.base {
                    *g = pc.lower(*g);
                }
                return true;
            }
        }
        if let Some((lb, windows, _)) = self.lb.as_mut() {
            if let Some((Some(prev), cur)) = windows.push(episode_error_norm) {
                let increased = cur > prev;
                lb.adapt_lb(increased);
                return increased;
            }
        }
        false
    }
}

/// PASS inner-level state.
#[derive(Debug, Clone, PartialEq)]
pub struct PassState {
    pub scheme: HlScheme,
    gamma_hat: Vec<f64>,
    last_residual: Vec<Option<f64>>,
    prev_vector: Vec<f64>,
}

impl PassState {
    pub fn new(states: usize, scheme: HlScheme) -> Self {
        Self {
            scheme,
            gamma_hat: vec![0.0; states],
            last_residual: vec![None; states],
            prev_vector: vec![0.0; states],
        }
    }

    pub fn len(&self) -> usize {
        self.gamma_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma_hat.is_empty()
    }

    pub fn gamma_hat(&self, z: StateIndex) -> f64 {
        self.gamma_hat[z.0]
    }

    pub fn last_residual(&self, z: StateIndex) -> Option<f64> {
        self.last_residual[z.0]
    }

    /// Sign of the residual stored at the last visit (0 before any visit).
    pub fn last_sign(&self, z: StateIndex) -> i8 {
        match self.last_residual[z.0] {
            Some(r) if r > 0.0 => 1,
            Some(r) if r < 0.0 => -1,
            _ => 0,
        }
    }

    pub fn previous_vector(&self) -> &[f64] {
        &self.prev_vector
    }

    pub(crate) fn set(&mut self, z: StateIndex, gamma_hat: f64, residual: f64) {
        self.gamma_hat[z.0] = gamma_hat;
        self.last_residual[z.0] = Some(residual);
    }

    pub(crate) fn set_previous_vector(&mut self, v: &[f64]) {
        self.prev_vector.copy_from_slice(v);
    }
}
