use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Log-log regression of a per-n statistic on `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub n_grid: Vec<usize>,
    pub means: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// `true` when the standard errors were unusable and plain least
    /// squares was used.
    pub unweighted: bool,
}

impl RateFit {
    pub fn predict(&self, n: f64) -> f64 {
        (self.intercept + self.slope * n.ln()).exp()
    }
}

/// Weighted least squares of `log mean` on `log n` with delta-method
/// weights `(mean / se)^2`. Falls back to ordinary least squares when any
/// standard error is zero.
pub fn fit_rate(n_grid: &[usize], means: &[f64], ses: &[f64]) -> Result<RateFit> {
    let k = n_grid.len();
    if k < 2 || means.len() != k || ses.len() != k {
        return Err(Error::InvalidInput("need at least two (n, mean, se) triples of equal length".into()));
    }
    if means.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
        return Err(Error::InvalidInput("means must be positive to fit on the log scale".into()));
    }
    let x: Vec<f64> = n_grid.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = means.iter().map(|m| m.ln()).collect();
    let unweighted = ses.iter().any(|s| !(*s > 0.0 && s.is_finite()));
    let w: Vec<f64> = if unweighted {
        vec![1.0; k]
    } else {
        means.iter().zip(ses).map(|(m, s)| (m / s).powi(2)).collect()
    };
    let sw: f64 = w.iter().sum();
    let mx = w.iter().zip(&x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let my = w.iter().zip(&y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(&x).map(|(w, x)| w * (x - mx).powi(2)).sum();
    let sxy: f64 = w.iter().zip(&x).zip(&y).map(|((w, x), y)| w * (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if unweighted {
        if k > 2 {
            let rss: f64 = x.iter().zip(&y).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
            (rss / (k - 2) as f64 / sxx).sqrt()
        } else {
            0.0
        }
    } else {
        // known variances on the log scale: Var(log mean) ~ (se / mean)^2
        (1.0 / sxx).sqrt()
    };
    Ok(RateFit {
        slope,
        intercept,
        slope_se,
        n_grid: n_grid.to_vec(),
        means: means.to_vec(),
        std_errors: ses.to_vec(),
        unweighted,
    })
}
