//! Closed-form rate and bound calculators used as overlays on measured
//! curves. Everything is exponent-level: unknown constants are dropped.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("entropy exponent must be positive, got {alpha}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRates {
    /// Exponent of the minimax rate `n^{-1/(2(1+alpha))}`.
    pub lower: f64,
    /// Exponent of the generic ERM upper bound.
    pub upper: f64,
    /// A `sqrt(log n)` factor multiplies the upper bound.
    pub log_factor: bool,
}

/// Classical minimax versus global-ERM exponents for a class with entropy
/// exponent `alpha`.
pub fn classical_gap_rates(alpha: f64) -> Result<GapRates> {
    check_alpha(alpha)?;
    let lower = -1.0 / (2.0 * (1.0 + alpha));
    Ok(GapRates {
        lower,
        upper: lower.max(-1.0 / (4.0 * alpha)),
        log_factor: alpha == 1.0,
    })
}

/// Exponents of the generic lower and upper bounds on the expected
/// empirical process supremum, `n^{(a-1)/(2(a+1))}` and `n^{(a-1)/(2a)}`.
pub fn generic_ep_bounds(alpha: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    Ok((
        (alpha - 1.0) / (2.0 * (alpha + 1.0)),
        (alpha - 1.0) / (2.0 * alpha),
    ))
}

/// Chaining bound for classes with `L_p` bracketing entropy exponent `alpha`.
pub fn chaining_bound(alpha: f64, p: f64, sigma: f64, n: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(p >= 1.0) {
        return Err(Error::InvalidInput(format!("p must be at least 1, got {p}")));
    }
    if !(sigma > 0.0 && sigma <= 1.0) || !(n >= 1.0) {
        return Err(Error::InvalidInput("need sigma in (0, 1] and n >= 1".into()));
    }
    let q = p.min(2.0);
    let tail = n.powf(-0.5) * sigma.powf(-alpha);
    if alpha < q {
        Ok(sigma.powf((q - alpha) / 2.0) + tail)
    } else if alpha > q {
        Ok(n.powf((alpha - q) / (2.0 * (alpha + 2.0 - q))) + sigma.powf(-(alpha - q) / 2.0) + tail)
    } else {
        Err(Error::Unsupported(
            "alpha = min(p, 2) is the boundary case, where the bound carries an unresolved logarithmic factor".into(),
        ))
    }
}

/// Order of `E sup_{C : P(C) <= sigma^2} |G_n(C)|` for set classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SupRate {
    Point { value: f64 },
    /// Boundary case `alpha = 1`: the order lies between the two values.
    Bracket { low: f64, high: f64 },
}

pub fn set_sup_rate(alpha: f64, sigma: f64, n: f64) -> Result<SupRate> {
    check_alpha(alpha)?;
    if !(sigma > 0.0 && sigma <= 1.0) || !(n >= 1.0) {
        return Err(Error::InvalidInput("need sigma in (0, 1] and n >= 1".into()));
    }
    if alpha == 1.0 {
        return Ok(SupRate::Bracket {
            low: 1.0,
            high: n.ln().max(1.0),
        });
    }
    Ok(SupRate::Point {
        value: sigma
            .powf(1.0 - alpha)
            .max(n.powf((alpha - 1.0) / (2.0 * (alpha + 1.0)))),
    })
}

/// Estimator families with a risk theorem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum RiskModel {
    /// Set LSE in the image model (entropy exponent `alpha`).
    Image { alpha: f64 },
    /// Set LSE in the edge model.
    Edge { alpha: f64 },
    /// Set ERM under the margin condition; excess risk.
    Classification { alpha: f64 },
    /// Isotonic LSE in dimension `d`, squared L2 risk.
    Isotonic { d: usize },
    /// s-concave density MLE in dimension `d`, squared Hellinger risk.
    SConcave { d: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePrediction {
    pub context: &'static str,
    /// Exponent of `n`.
    pub exponent: f64,
    /// Power of `log n`.
    pub log_power: f64,
}

impl RatePrediction {
    /// `n^exponent log^gamma n`, up to constants.
    pub fn raw(&self, n: f64) -> f64 {
        n.powf(self.exponent) * n.ln().powf(self.log_power)
    }

    /// Curve through `(n_ref, value_ref)`.
    pub fn normalized(&self, n: f64, n_ref: f64, value_ref: f64) -> f64 {
        value_ref * self.raw(n) / self.raw(n_ref)
    }
}

pub fn risk_rate(model: RiskModel) -> Result<RatePrediction> {
    let set_rate = |alpha: f64, context| -> Result<RatePrediction> {
        check_alpha(alpha)?;
        Ok(RatePrediction {
            context,
            exponent: -1.0 / (alpha + 1.0),
            log_power: 0.0,
        })
    };
    let need_dim = |d: usize, min: usize| {
        if d < min {
            Err(Error::InvalidInput(format!("dimension {d} below {min}")))
        } else {
            Ok(())
        }
    };
    match model {
        RiskModel::Image { alpha } => set_rate(alpha, "image LSE"),
        RiskModel::Edge { alpha } => set_rate(alpha, "edge LSE"),
        RiskModel::Classification { alpha } => set_rate(alpha, "classification ERM"),
        RiskModel::Isotonic { d } => {
            need_dim(d, 2)?;
            Ok(RatePrediction {
                context: "isotonic LSE",
                exponent: -1.0 / d as f64,
                log_power: if d == 2 { 2.0 } else { 1.0 },
            })
        }
        RiskModel::SConcave { d } => {
            need_dim(d, 2)?;
            Ok(RatePrediction {
                context: "s-concave MLE",
                exponent: -2.0 / (d as f64 + 1.0),
                log_power: match d {
                    2 => 2.0 / 3.0,
                    3 => 2.0,
                    _ => 1.0,
                },
            })
        }
    }
}
