//! Error curves and empirical convergence rates.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub label: String,
    points: Vec<(u64, f64)>,
}

impl ErrorCurve {
    pub fn new(label: impl Into<String>, points: Vec<(u64, f64)>) -> Result<Self> {
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::param("points", "steps must be strictly increasing"));
        }
        if points.iter().any(|(_, v)| !v.is_finite() || *v < 0.0) {
            return Err(Error::param("points", "values must be finite and >= 0"));
        }
        Ok(Self {
            label: label.into(),
            points,
        })
    }

    pub fn points(&self) -> &[(u64, f64)] {
        &self.points
    }

    pub fn last(&self) -> Option<(u64, f64)> {
        self.points.last().copied()
    }

    /// Value at `step`, if recorded.
    pub fn at(&self, step: u64) -> Option<f64> {
        self.points
            .binary_search_by_key(&step, |p| p.0)
            .ok()
            .map(|i| self.points[i].1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// Slope of `log value` against `log n`.
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of `log log n` when it is added as a second regressor.
    pub log_log: Option<f64>,
    pub points: usize,
}

/// Least squares on the columns of `x` (each row includes the constant).
fn least_squares<const K: usize>(rows: &[[f64; K]], y: &[f64]) -> Option<[f64; K]> {
    let mut a = [[0.0; K]; K];
    let mut b = [0.0; K];
    for (r, yi) in rows.iter().zip(y) {
        for i in 0..K {
            b[i] += r[i] * yi;
            for j in 0..K {
                a[i][j] += r[i] * r[j];
            }
        }
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..K {
        let piv = (col..K).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..K {
            let f = a[row][col] / a[col][col];
            let pivot = a[col];
            for (x, p) in a[row][col..].iter_mut().zip(&pivot[col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; K];
    for i in (0..K).rev() {
        let s: f64 = (i + 1..K).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Fit `value ≈ C·n^slope` on the points with `step > burn_in`.
pub fn fit_rate(curve: &ErrorCurve, burn_in: u64) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|(n, _)| *n > burn_in)
        .map(|&(n, v)| (n as f64, v))
        .collect();
    if pts.len() < 10 {
        return Err(Error::param(
            "curve",
            format!("need >= 10 points after burn-in, got {}", pts.len()),
        ));
    }
    if pts.iter().any(|(n, v)| *v <= 0.0 || *n <= 0.0) {
        return Err(Error::param("curve", "values and steps must be positive to take logs"));
    }
    let y: Vec<f64> = pts.iter().map(|(_, v)| v.ln()).collect();
    let rows: Vec<[f64; 2]> = pts.iter().map(|(n, _)| [1.0, n.ln()]).collect();
    let [intercept, slope] =
        least_squares(&rows, &y).ok_or_else(|| Error::param("curve", "degenerate design (all steps equal)"))?;
    let log_log = if pts.iter().all(|(n, _)| *n > 1.0) {
        let rows: Vec<[f64; 3]> = pts.iter().map(|(n, _)| [1.0, n.ln(), n.ln().ln()]).collect();
        least_squares(&rows, &y).map(|c| c[2])
    } else {
        None
    };
    Ok(RateFit {
        slope,
        intercept,
        log_log,
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(f: impl Fn(f64) -> f64) -> ErrorCurve {
        ErrorCurve::new("t", (1..=200).map(|n| (n, f(n as f64))).collect()).unwrap()
    }

    #[test]
    fn exact_power_laws() {
        assert!((fit_rate(&curve(|n| 1.0 / n), 0).unwrap().slope + 1.0).abs() < 1e-10);
        assert!((fit_rate(&curve(|n| 3.0 / n.sqrt()), 0).unwrap().slope + 0.5).abs() < 1e-10);
        let fit = fit_rate(&curve(|n| n.ln() / n), 5).unwrap();
        assert!((fit.log_log.unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_curves() {
        assert!(ErrorCurve::new("t", vec![(2, 1.0), (1, 1.0)]).is_err());
        let c = ErrorCurve::new("t", (1..=20).map(|n| (n, 0.0)).collect()).unwrap();
        assert!(fit_rate(&c, 0).is_err());
        let c = ErrorCurve::new("t", (1..=20).map(|n| (n, 1.0)).collect()).unwrap();
        assert!(fit_rate(&c, 15).is_err());
    }
}
