//! One-step contraction `E_k[e^{k+1}] ≤ α_k e^k + M_k` on the quadratic
//! problem `m(q, x) = q − x`, `x ~ N(q*, σ²)`.
//!
//! Constants: `L = B = 1`, `v = E[(X − X')²] = 2σ²`, `p(γ) = 2Lγ − Bγ²`.
//!
//! | algorithm | α_k                                                   | M_k                   |
//! |-----------|-------------------------------------------------------|-----------------------|
//! | RL        | `1 − p(γ)`                                            | `Bγ²(4 + 3v)`         |
//! | SAGA      | `max(1 − 2γL + 3Bγ² + B/(Mc), 1 − 1/M + 6γ²c)`        | `3Bγ²(4 + 3v)`        |
//! | PASS      | `1 − p_k(γ_) + d₁γ²·1{c_k ≥ 1}`                      | `B(c_kγ̄)²(4 + 3v)`    |
//!
//! For PASS, `L_k = 1`, `B_k = (e + v)/(1 + e + v)`, `γ̄ = L_k/B_k`,
//! `c_k = E[γ̂'m]/(γ̄E[m])`, `γ_ = min(c_kγ̄, γ̄)` and `d₁ = (r₁ − 1)²B_k`.
//! For SAGA the error includes the memory:
//! `e = c(q − q*)² + mean_j M[j]² + σ²`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::stepsize::{h_increase, l_decrease, HlScheme, PASS_RATIO};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticProblem {
    pub q_star: f64,
    pub sigma: f64,
}

impl QuadraticProblem {
    pub const L: f64 = 1.0;
    pub const B: f64 = 1.0;

    pub fn v(&self) -> f64 {
        2.0 * self.sigma * self.sigma
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ContractionSetup {
    Rl,
    Saga {
        memory: Vec<f64>,
        c: f64,
    },
    Pass {
        last_residual: f64,
        gamma_hat: f64,
        scheme: HlScheme,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionReport {
    pub e_k: f64,
    pub lhs_mean: f64,
    pub lhs_stderr: f64,
    pub alpha: f64,
    pub m: f64,
    pub rhs: f64,
    pub violated: bool,
}

fn mean_stderr(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte-Carlo estimate of the next error at iterate `q` with rate `gamma`.
pub fn prop0_contraction_check<R: Rng + ?Sized>(
    setup: &ContractionSetup,
    problem: QuadraticProblem,
    q: f64,
    gamma: f64,
    replications: usize,
    rng: &mut R,
) -> Result<ContractionReport> {
    if replications == 0 {
        return Err(Error::param("replications", "must be positive"));
    }
    if !(gamma >= 0.0) {
        return Err(Error::param("gamma", "must be >= 0"));
    }
    let (l, b, v, s) = (QuadraticProblem::L, QuadraticProblem::B, problem.v(), problem.sigma);
    let bias = (q - problem.q_star).powi(2);
    let residuals: Vec<f64> = (0..replications)
        .map(|_| q - (problem.q_star + s * rng.sample::<f64, _>(StandardNormal)))
        .collect();
    let p = |x: f64| 2.0 * l * x - b * x * x;
    let (e_k, next, alpha, m) = match setup {
        ContractionSetup::Rl => {
            let next: Vec<f64> = residuals
                .iter()
                .map(|r| (q - gamma * r - problem.q_star).powi(2))
                .collect();
            (bias, next, 1.0 - p(gamma), b * gamma * gamma * (4.0 + 3.0 * v))
        }
        ContractionSetup::Saga { memory, c } => {
            let depth = memory.len();
            if depth == 0 || !(*c > 0.0) {
                return Err(Error::param("memory", "need depth >= 1 and c > 0"));
            }
            let mf = depth as f64;
            let mean_mem = memory.iter().sum::<f64>() / mf;
            let mem_sq = memory.iter().map(|x| x * x).sum::<f64>();
            let e_k = c * bias + mem_sq / mf + s * s;
            let next = residuals
                .iter()
                .map(|r| {
                    let i = rng.random_range(0..depth);
                    let qn = q - gamma * (r - memory[i] + mean_mem);
                    let mem_next = mem_sq - memory[i] * memory[i] + r * r;
                    c * (qn - problem.q_star).powi(2) + mem_next / mf + s * s
                })
                .collect();
            let alpha = (1.0 - 2.0 * gamma * l + 3.0 * b * gamma * gamma + b / (mf * c))
                .max(1.0 - 1.0 / mf + 6.0 * gamma * gamma * c);
            (e_k, next, alpha, 3.0 * b * gamma * gamma * (4.0 + 3.0 * v))
        }
        ContractionSetup::Pass {
            last_residual,
            gamma_hat,
            scheme,
        } => {
            if bias == 0.0 {
                return Err(Error::param("q", "PASS constants need q != q*"));
            }
            let up = h_increase(*gamma_hat, gamma, *scheme)?;
            let down = l_decrease(*gamma_hat, gamma, *scheme)?;
            let rates: Vec<f64> = residuals
                .iter()
                .map(|r| if r * last_residual >= 0.0 { up } else { down })
                .collect();
            let next: Vec<f64> = residuals
                .iter()
                .zip(&rates)
                .map(|(r, g)| (q - g * r - problem.q_star).powi(2))
                .collect();
            let n = residuals.len() as f64;
            let l_k = 1.0;
            let b_k = (bias + v) / (1.0 + bias + v);
            let g_bar = l_k / b_k;
            let mean_gm = residuals.iter().zip(&rates).map(|(r, g)| g * r).sum::<f64>() / n;
            let mean_m = residuals.iter().sum::<f64>() / n;
            let c_k = mean_gm / (g_bar * mean_m);
            let g_under = (c_k * g_bar).min(g_bar);
            let d1 = (PASS_RATIO - 1.0).powi(2) * b_k;
            let jump = if c_k >= 1.0 { d1 * gamma * gamma } else { 0.0 };
            let alpha = 1.0 - (2.0 * l_k * g_under - b_k * g_under * g_under) + jump;
            (bias, next, alpha, b * (c_k * g_bar).powi(2) * (4.0 + 3.0 * v))
        }
    };
    let (lhs_mean, lhs_stderr) = mean_stderr(&next);
    let rhs = alpha * e_k + m;
    Ok(ContractionReport {
        e_k,
        lhs_mean,
        lhs_stderr,
        alpha,
        m,
        rhs,
        violated: lhs_mean > rhs + 3.0 * lhs_stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_rate_keeps_the_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pb = QuadraticProblem {
            q_star: 1.0,
            sigma: 1.0,
        };
        let r = prop0_contraction_check(&ContractionSetup::Rl, pb, 3.0, 0.0, 100, &mut rng).unwrap();
        assert_eq!(r.lhs_mean, 4.0);
        assert_eq!(r.rhs, 4.0);
        assert!(!r.violated);
    }

    #[test]
    fn rl_constants_at_one_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pb = QuadraticProblem {
            q_star: 0.0,
            sigma: 1.0,
        };
        let r = prop0_contraction_check(&ContractionSetup::Rl, pb, 1.0, 0.5, 10, &mut rng).unwrap();
        assert_eq!(r.alpha, 0.25);
        assert_eq!(r.m, 0.25 * (4.0 + 3.0 * 2.0));
    }
}
