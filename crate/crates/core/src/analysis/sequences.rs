//! Renewal-type sequences behind the error bound.
//!
//! All sequences are 1-based in the formulas and stored 0-based: `x_k` is
//! `x[k − 1]`. Throughout, `a_j = P(τ ≥ j)` are the return-time tails of the
//! visit chain, `ā = a / Σa`, and
//!
//! `v_n = ε_n + μ_n Σ_{j<n} a_{n−j} b_j v_j`                         (direct)
//! `v_n = Σ_{j≤n} A^{(j)}_{n+1−j} ε_j`                               (representation)
//!
//! with `A_1 = 1`, `A_{k+1} = μ_{k+1} Σ_{l≤k} a_{k+1−l} b_l A_l` computed on
//! the shifted sequences `μ^{(j)}_k = μ_{k+j−1}`, `b^{(j)}_k = b_{k+j−1}`.

use crate::error::{Error, Result};

fn at(x: &[f64], k: usize) -> f64 {
    x[k - 1]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma5Result {
    pub direct: Vec<f64>,
    pub representation: Vec<f64>,
    pub identity_gap: f64,
}

fn check_len(name: &'static str, x: &[f64], n: usize) -> Result<()> {
    if x.len() < n {
        return Err(Error::param(name, format!("need length >= {n}, got {}", x.len())));
    }
    if x[..n].iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::param(name, "entries must be finite and non-negative"));
    }
    Ok(())
}

/// `A^{(j)}_1..A^{(j)}_{len}` for the shift `j`.
fn representation_weights(mu: &[f64], a: &[f64], b: &[f64], j: usize, len: usize) -> Vec<f64> {
    let mu_j = |k: usize| at(mu, k + j - 1);
    let b_j = |k: usize| at(b, k + j - 1);
    let mut w = Vec::with_capacity(len);
    w.push(1.0);
    for k in 1..len {
        let s: f64 = (1..=k).map(|l| at(a, k + 1 - l) * b_j(l) * w[l - 1]).sum();
        w.push(mu_j(k + 1) * s);
    }
    w
}

/// Evaluates `v_1..v_n` both ways and reports the largest discrepancy.
pub fn lemma5_recursion(mu: &[f64], a: &[f64], b: &[f64], epsilon: &[f64], n: usize) -> Result<Lemma5Result> {
    for (name, x) in [("mu", mu), ("a", a), ("b", b), ("epsilon", epsilon)] {
        check_len(name, x, n)?;
    }
    let mut direct = Vec::with_capacity(n);
    for k in 1..=n {
        let s: f64 = (1..k).map(|j| at(a, k - j) * at(b, j) * direct[j - 1]).sum();
        direct.push(at(epsilon, k) + at(mu, k) * s);
    }
    let weights: Vec<Vec<f64>> = (1..=n)
        .map(|j| representation_weights(mu, a, b, j, n + 1 - j))
        .collect();
    let representation: Vec<f64> = (1..=n)
        .map(|k| (1..=k).map(|j| weights[j - 1][k - j] * at(epsilon, j)).sum())
        .collect();
    let identity_gap = direct
        .iter()
        .zip(&representation)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok(Lemma5Result {
        direct,
        representation,
        identity_gap,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionPowers {
    /// `powers[m − 1] = ā^{*m}`, truncated at `k_max`.
    pub powers: Vec<Vec<f64>>,
    /// `sup_k |ā^{*(m+1)}_k − ā^{*m}_k|` for successive powers.
    pub sup_changes: Vec<f64>,
}

fn check_abar(a_bar: &[f64]) -> Result<()> {
    if a_bar.iter().any(|v| !(*v >= 0.0)) || a_bar.iter().sum::<f64>() > 1.0 + 1e-12 {
        return Err(Error::param("a_bar", "must be non-negative with total mass <= 1"));
    }
    Ok(())
}

/// `y_k = Σ_{l=1}^{k} ā_{k+1−l} w_l x_l` with `w_l = b_l` (1 beyond `b`).
fn convolve(a_bar: &[f64], b: Option<&[f64]>, x: &[f64]) -> Vec<f64> {
    let a = |k: usize| a_bar.get(k - 1).copied().unwrap_or(0.0);
    let w = |l: usize| b.and_then(|b| b.get(l - 1)).copied().unwrap_or(1.0);
    (1..=x.len())
        .map(|k| (1..=k).map(|l| a(k + 1 - l) * w(l) * x[l - 1]).sum())
        .collect()
}

pub fn convolution_powers(a_bar: &[f64], b: Option<&[f64]>, m_max: usize, k_max: usize) -> Result<ConvolutionPowers> {
    check_abar(a_bar)?;
    if m_max == 0 {
        return Err(Error::param("m_max", "must be >= 1"));
    }
    let first: Vec<f64> = (1..=k_max).map(|k| a_bar.get(k - 1).copied().unwrap_or(0.0)).collect();
    let mut powers = vec![first];
    let mut sup_changes = Vec::with_capacity(m_max - 1);
    for _ in 1..m_max {
        let prev = powers.last().expect("non-empty");
        let next = convolve(a_bar, b, prev);
        sup_changes.push(next.iter().zip(prev).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
        powers.push(next);
    }
    Ok(ConvolutionPowers { powers, sup_changes })
}

/// `U = Σ_{m≥1} ā^{*m}` truncated at `k_max`, summed until the newest power
/// has sup-norm below `tol`. Returns `(U, powers used)`.
pub fn renewal_series(a_bar: &[f64], k_max: usize, tol: f64, m_max: usize) -> Result<(Vec<f64>, usize)> {
    check_abar(a_bar)?;
    let mut power: Vec<f64> = (1..=k_max).map(|k| a_bar.get(k - 1).copied().unwrap_or(0.0)).collect();
    let mut total = power.clone();
    for m in 2..=m_max {
        power = convolve(a_bar, None, &power);
        for (t, p) in total.iter_mut().zip(&power) {
            *t += p;
        }
        if power.iter().copied().fold(0.0, f64::max) < tol {
            return Ok((total, m));
        }
    }
    Err(Error::param(
        "m_max",
        format!("renewal series not converged to {tol} within {m_max} powers"),
    ))
}

/// Inputs of the bound `B′ Σ_{l+j+i=n} ε̄_j μ̄^j_l U_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSequences {
    /// Return-time tails `a_j`.
    pub a: Vec<f64>,
    /// `b_j = E[α_j e^j] / E[e^j]`.
    pub b: Vec<f64>,
    /// Contraction factors `μ_j`; `r_j = 1 − μ_j`.
    pub mu: Vec<f64>,
    /// Noise sequence `ε_n`.
    pub epsilon: Vec<f64>,
    /// `ā^{*∞}` as the renewal series of `ā`.
    pub a_star: Vec<f64>,
}

impl BoundSequences {
    /// `ε_n = e¹ a_n + Σ_{j<n} a_{n−j} E[M_j]`, `μ = b`, `ā = a/Σa`.
    pub fn from_error_model(a: Vec<f64>, b: Vec<f64>, e1: f64, expected_m: &[f64], tol: f64) -> Result<Self> {
        let k = a.len();
        if b.len() < k || expected_m.len() < k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: b.len().min(expected_m.len()),
            });
        }
        if a.iter().any(|x| !(0.0..=1.0).contains(x)) || a.windows(2).any(|w| w[1] > w[0] + 1e-15) {
            return Err(Error::param("a", "tails must lie in [0, 1] and be non-increasing"));
        }
        let epsilon: Vec<f64> = (1..=k)
            .map(|n| e1 * at(&a, n) + (1..n).map(|j| at(&a, n - j) * at(expected_m, j)).sum::<f64>())
            .collect();
        let mass: f64 = a.iter().sum();
        let a_bar: Vec<f64> = a.iter().map(|x| x / mass).collect();
        let (a_star, _) = renewal_series(&a_bar, k, tol, 100_000)?;
        Ok(Self {
            mu: b.clone(),
            a,
            b,
            epsilon,
            a_star,
        })
    }

    /// `μ̄^j_l = exp(−Σ_{i=max(1, j−l+1)}^{j} r_i)`.
    pub fn mu_bar(&self, j: usize, l: usize) -> f64 {
        let lo = (j + 1).saturating_sub(l).max(1);
        (-(lo..=j).map(|i| 1.0 - at(&self.mu, i)).sum::<f64>()).exp()
    }

    pub fn eps_bar(&self, j: usize) -> f64 {
        at(&self.b, j) * at(&self.epsilon, j)
    }
}

/// `B′ Σ_{l+j+i=n; l,j,i≥1} ε̄_j μ̄^j_l ā^{*∞}_i`.
pub fn theorem1_bound(seq: &BoundSequences, b_prime: f64, n: usize) -> f64 {
    let mut s = 0.0;
    for l in 1..n.saturating_sub(1) {
        for j in 1..n - l {
            let i = n - l - j;
            s += seq.eps_bar(j) * seq.mu_bar(j, l) * at(&seq.a_star, i);
        }
    }
    b_prime * s
}
