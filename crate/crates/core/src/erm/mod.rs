//! Global ERMs for the image, edge and classification models, each reduced
//! to one call of the class's maximum-weight set oracle.

mod region;

pub use region::{ConvexPolygon, Orientation, Region, Staircase};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::closure::{SelectionKind, SetSelection};
use crate::convex::hull_indices;
use crate::error::{Error, Result};
use crate::model::{PointCloud, SeedPolicy, SetClassDescriptor};
use crate::oracle::SetOracle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    /// `Y = 1_C0(X) + xi`.
    Image,
    /// `Y = f_C0(X) eta` with `P(eta = 1) = 1/2 + a`.
    Edge { a: f64 },
    /// `Y | X ~ Bernoulli(1/2 + b (2 1_C0(X) - 1))`.
    Classification { b: f64 },
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Image => "image",
            Model::Edge { .. } => "edge",
            Model::Classification { .. } => "classification",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegressionSample {
    pub cloud: PointCloud,
    pub responses: Vec<f64>,
    pub model: Model,
}

impl RegressionSample {
    pub fn new(cloud: PointCloud, responses: Vec<f64>, model: Model) -> Result<Self> {
        if responses.len() != cloud.len() {
            return Err(Error::InvalidInput(format!(
                "{} responses for {} points",
                responses.len(),
                cloud.len()
            )));
        }
        if responses.iter().any(|y| !y.is_finite()) {
            return Err(Error::InvalidInput("responses must be finite".into()));
        }
        match model {
            Model::Image => {}
            Model::Edge { a } => {
                if !(a > 0.0 && a <= 0.5) {
                    return Err(Error::InvalidInput(format!("edge parameter a = {a} outside (0, 1/2]")));
                }
                if responses.iter().any(|&y| y != 1.0 && y != -1.0) {
                    return Err(Error::InvalidInput("edge responses must be +1 or -1".into()));
                }
            }
            Model::Classification { b } => {
                if !(b > 0.0 && b <= 0.5) {
                    return Err(Error::InvalidInput(format!("margin b = {b} outside (0, 1/2]")));
                }
                if responses.iter().any(|&y| y != 0.0 && y != 1.0) {
                    return Err(Error::InvalidInput("classification labels must be 0 or 1".into()));
                }
            }
        }
        Ok(Self {
            cloud,
            responses,
            model,
        })
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    /// Oracle weights whose argmax is the ERM of this model.
    pub fn oracle_weights(&self) -> Vec<f64> {
        match self.model {
            Model::Image | Model::Classification { .. } => {
                self.responses.iter().map(|y| 2.0 * y - 1.0).collect()
            }
            Model::Edge { .. } => self.responses.clone(),
        }
    }

    /// Empirical loss of the set with the given sample indicator.
    pub fn loss(&self, indicator: &[bool]) -> f64 {
        let pairs = self.responses.iter().zip(indicator);
        match self.model {
            Model::Image => pairs.map(|(y, &c)| (y - f64::from(u8::from(c))).powi(2)).sum(),
            Model::Edge { a } => pairs
                .map(|(y, &c)| {
                    let f = if c { 1.0 } else { -1.0 };
                    (y - 2.0 * a * f).powi(2)
                })
                .sum(),
            Model::Classification { .. } => pairs
                .filter(|(y, &c)| (**y == 1.0) != c)
                .count() as f64,
        }
    }
}

fn fit(sample: &RegressionSample, class: SetClassDescriptor, expect: &str) -> Result<SetSelection> {
    if sample.model.name() != expect {
        return Err(Error::InvalidInput(format!(
            "expected a {expect} sample, got {}",
            sample.model.name()
        )));
    }
    SetOracle::new(&sample.cloud, class)?.maximize(&sample.oracle_weights())
}

/// Least squares set estimator in the image model.
pub fn image_lse(sample: &RegressionSample, class: SetClassDescriptor) -> Result<SetSelection> {
    fit(sample, class, "image")
}

/// Least squares set estimator in the edge model; the minimizer does not depend on `a`.
pub fn edge_lse(sample: &RegressionSample, class: SetClassDescriptor) -> Result<SetSelection> {
    fit(sample, class, "edge")
}

/// Training-error minimizer over set indicators.
pub fn classification_erm(sample: &RegressionSample, class: SetClassDescriptor) -> Result<SetSelection> {
    fit(sample, class, "classification")
}

/// Minimal lower (or upper) set containing the selected points.
pub fn canonical_extension(selection: &SetSelection, cloud: &PointCloud) -> Result<Staircase> {
    let orientation = match selection.kind {
        SelectionKind::DownSet => Orientation::Lower,
        SelectionKind::UpSet => Orientation::Upper,
        SelectionKind::ConvexPosition => {
            return Err(Error::InvalidInput(
                "staircase extension needs a down-set or up-set selection".into(),
            ))
        }
    };
    let corners = selection.indices.iter().map(|&i| cloud.point(i).to_vec()).collect();
    Staircase::new(cloud.dim(), corners, orientation)
}

/// Convex hull of the selected points as a polygon.
pub fn hull_extension(selection: &SetSelection, cloud: &PointCloud) -> Result<ConvexPolygon> {
    if cloud.dim() != 2 {
        return Err(Error::Unsupported("polygon extension needs d = 2".into()));
    }
    let vertices = hull_indices(cloud, &selection.indices)?
        .into_iter()
        .map(|i| {
            let p = cloud.point(i);
            [p[0], p[1]]
        })
        .collect();
    Ok(ConvexPolygon { vertices })
}

/// Region representing the estimator chosen by `selection`.
pub fn estimated_region(selection: &SetSelection, cloud: &PointCloud) -> Result<Region> {
    if selection.is_empty() {
        return Ok(Region::Empty { dim: cloud.dim() });
    }
    match selection.kind {
        SelectionKind::ConvexPosition => Ok(Region::Polygon(hull_extension(selection, cloud)?)),
        _ => Ok(Region::Staircase(canonical_extension(selection, cloud)?)),
    }
}

pub fn staircase_volume(st: &Staircase) -> Result<f64> {
    st.volume()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RiskMode {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub value: f64,
    /// Zero for exact evaluations.
    pub std_error: f64,
}

/// `P(est Δ truth)` under the uniform law on `[0,1]^d`.
pub fn symmetric_difference_risk(est: &Region, truth: &Region, mode: RiskMode) -> Result<RiskEstimate> {
    if est.dim() != truth.dim() {
        return Err(Error::InvalidInput("regions of different dimension".into()));
    }
    match mode {
        RiskMode::Exact => {
            let (a, b, ab) = est
                .volume()
                .zip(truth.volume())
                .zip(est.intersection_volume(truth))
                .map(|((a, b), ab)| (a, b, ab))
                .ok_or_else(|| {
                    Error::Unsupported("no exact volume for this pair of regions; use Monte Carlo".into())
                })?;
            Ok(RiskEstimate {
                value: (a + b - 2.0 * ab).max(0.0),
                std_error: 0.0,
            })
        }
        RiskMode::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(Error::InvalidInput("Monte Carlo needs at least 2 samples".into()));
            }
            let mut rng = SeedPolicy::new(seed).rng(0, "risk-eval");
            let d = est.dim();
            let mut x = vec![0.0; d];
            let mut hits = 0usize;
            for _ in 0..samples {
                x.iter_mut().for_each(|v| *v = rng.gen());
                if est.contains(&x) != truth.contains(&x) {
                    hits += 1;
                }
            }
            let p = hits as f64 / samples as f64;
            Ok(RiskEstimate {
                value: p,
                std_error: (p * (1.0 - p) / (samples - 1) as f64).sqrt(),
            })
        }
    }
}

/// Exact when possible, Monte Carlo otherwise.
pub fn risk_auto(est: &Region, truth: &Region, mc_samples: usize, seed: u64) -> Result<RiskEstimate> {
    match symmetric_difference_risk(est, truth, RiskMode::Exact) {
        Err(Error::Unsupported(_)) => {
            symmetric_difference_risk(est, truth, RiskMode::MonteCarlo { samples: mc_samples, seed })
        }
        other => other,
    }
}
