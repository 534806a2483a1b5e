//! Monte Carlo machinery for suprema of empirical processes indexed by set
//! classes: exact symmetrized suprema, Lagrangian localization, a greedy
//! packing entropy probe and checks of the multiplier inequalities.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::erm::ConvexPolygon;
use crate::error::{Error, Result};
use crate::model::{dominated, ClassKind, PointCloud, SeedPolicy, SetClassDescriptor};
use crate::oracle::SetOracle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum MultiplierLaw {
    Rademacher,
    Gaussian,
    /// Uniform over `{±v : v in support}`.
    Centered { support: Vec<f64> },
}

impl MultiplierLaw {
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        match self {
            MultiplierLaw::Rademacher => (0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect(),
            MultiplierLaw::Gaussian => (0..n).map(|_| rng.sample(StandardNormal)).collect(),
            MultiplierLaw::Centered { support } => (0..n)
                .map(|_| {
                    let v = support[rng.gen_range(0..support.len())];
                    if rng.gen::<bool>() {
                        v
                    } else {
                        -v
                    }
                })
                .collect(),
        }
    }

    /// `P(|xi| > t)`.
    pub fn tail(&self, t: f64) -> f64 {
        match self {
            MultiplierLaw::Rademacher => f64::from(u8::from(t < 1.0)),
            MultiplierLaw::Gaussian => erfc(t / std::f64::consts::SQRT_2),
            MultiplierLaw::Centered { support } => {
                support.iter().filter(|v| v.abs() > t).count() as f64 / support.len() as f64
            }
        }
    }

    /// Smallest `t` with `P(|xi| > t)` negligible.
    fn tail_end(&self) -> f64 {
        match self {
            MultiplierLaw::Rademacher => 1.0,
            MultiplierLaw::Gaussian => 12.0,
            MultiplierLaw::Centered { support } => support.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    fn validate(&self) -> Result<()> {
        if let MultiplierLaw::Centered { support } = self {
            if support.is_empty() || support.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("centered law needs a finite, non-empty support".into()));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            MultiplierLaw::Rademacher => "rademacher",
            MultiplierLaw::Gaussian => "gaussian",
            MultiplierLaw::Centered { .. } => "centered",
        }
    }
}

/// `sup_C |sum_i xi_i 1_C(X_i)|` without normalization.
pub fn absolute_sup(oracle: &SetOracle<'_>, multipliers: &[f64]) -> Result<f64> {
    let neg: Vec<f64> = multipliers.iter().map(|x| -x).collect();
    let plus = oracle.maximize(multipliers)?.objective_value;
    let minus = oracle.maximize(&neg)?.objective_value;
    Ok(plus.max(minus).max(0.0))
}

/// `sup_C |sum_i xi_i 1_C(X_i)| / sqrt(n)`, exact via two oracle calls.
pub fn symmetrized_sup(cloud: &PointCloud, class: SetClassDescriptor, multipliers: &[f64]) -> Result<f64> {
    if multipliers.len() != cloud.len() {
        return Err(Error::InvalidInput(format!(
            "{} multipliers for {} points",
            multipliers.len(),
            cloud.len()
        )));
    }
    if cloud.is_empty() {
        return Ok(0.0);
    }
    let oracle = SetOracle::new(cloud, class)?;
    Ok(absolute_sup(&oracle, multipliers)? / (cloud.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupEstimate {
    pub n: usize,
    pub class: SetClassDescriptor,
    /// Localization radius; 1 means unlocalized.
    pub sigma: f64,
    pub replications: usize,
    pub mean: f64,
    pub std_error: f64,
    pub seed: u64,
}

/// Stream id of replicate `r` at sample size `n`.
pub fn replicate_id(n: usize, r: usize) -> u64 {
    ((n as u64) << 24) | r as u64
}

/// One draw of the normalized symmetrized supremum on a fresh uniform cloud.
pub fn sup_replicate(class: SetClassDescriptor, n: usize, law: &MultiplierLaw, policy: SeedPolicy, id: u64) -> Result<f64> {
    let mut cloud_rng = policy.rng(id, "cloud");
    let cloud = PointCloud::uniform(class.dim, n, &mut cloud_rng);
    let xi = law.sample(n, &mut policy.rng(id, "multipliers"));
    symmetrized_sup(&cloud, class, &xi)
}

/// Mean and standard error over `R` independent replicates.
pub fn estimate_sup_expectation(
    class: SetClassDescriptor,
    n: usize,
    replications: usize,
    law: &MultiplierLaw,
    seed: u64,
) -> Result<SupEstimate> {
    if replications < 2 {
        return Err(Error::InvalidInput("at least 2 replications are needed".into()));
    }
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    law.validate()?;
    let policy = SeedPolicy::new(seed);
    let draws: Vec<f64> = (0..replications)
        .into_par_iter()
        .map(|r| sup_replicate(class, n, law, policy, replicate_id(n, r)))
        .collect::<Result<_>>()?;
    let (mean, std_error) = mean_and_se(&draws);
    Ok(SupEstimate {
        n,
        class,
        sigma: 1.0,
        replications,
        mean,
        std_error,
        seed,
    })
}

pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    pub lambda: f64,
    /// Number of sample points in the maximizing set.
    pub size: usize,
    /// `sum_{i in C} xi_i` (unnormalized).
    pub value: f64,
}

/// Solves `max_C sum_{i in C} (xi_i - lambda)` for each `lambda`; each
/// solution is the constrained supremum at its own size.
pub fn localized_sup_lagrangian(
    cloud: &PointCloud,
    class: SetClassDescriptor,
    multipliers: &[f64],
    lambda_grid: &[f64],
) -> Result<Vec<EnvelopePoint>> {
    if multipliers.len() != cloud.len() {
        return Err(Error::InvalidInput("multiplier length mismatch".into()));
    }
    if lambda_grid.iter().any(|l| !(*l >= 0.0)) || lambda_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput("lambda grid must be non-negative and sorted".into()));
    }
    let oracle = SetOracle::new(cloud, class)?;
    lambda_grid
        .iter()
        .map(|&lambda| {
            let w: Vec<f64> = multipliers.iter().map(|x| x - lambda).collect();
            let sel = oracle.maximize(&w)?;
            Ok(EnvelopePoint {
                lambda,
                size: sel.len(),
                value: sel.indices.iter().map(|&i| multipliers[i]).sum(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyConfig {
    pub family_size: usize,
    /// Members use between 1 and this many random generators.
    pub max_generators: usize,
    pub seed: u64,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        Self {
            family_size: 3000,
            max_generators: 64,
            seed: 1,
        }
    }
}

/// Geometric grid of 12 radii in `[0.05, 0.7]`, the range on which the
/// estimator was calibrated.
pub fn default_eps_grid() -> Vec<f64> {
    let (lo, hi) = (0.05f64, 0.7f64);
    (0..12).map(|j| lo * (hi / lo).powf(j as f64 / 11.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub eps: Vec<f64>,
    pub packing_counts: Vec<usize>,
    pub log_packing: Vec<f64>,
    pub family_size: usize,
    /// Estimated exponent in `log N(eps) ~ eps^{-2 alpha}`.
    pub alpha_hat: f64,
}

/// Labelings of the cloud by a reproducible random family of class members.
/// Prefixes of the family do not depend on `family_size`.
pub fn random_family(class: SetClassDescriptor, cloud: &PointCloud, config: &EntropyConfig) -> Result<Vec<Vec<u64>>> {
    if class.dim != cloud.dim() {
        return Err(Error::Unsupported("class and cloud dimensions differ".into()));
    }
    let d = cloud.dim();
    let n = cloud.len();
    let words = n.div_ceil(64).max(1);
    let mut rng = SeedPolicy::new(config.seed).rng(0, "entropy-family");
    let kmax = config.max_generators.max(1) as f64;
    let mut family = Vec::with_capacity(config.family_size);
    for _ in 0..config.family_size {
        let k = (kmax.ln() * rng.gen::<f64>()).exp().floor().max(1.0) as usize;
        let mut bits = vec![0u64; words];
        match class.kind {
            ClassKind::LowerSets | ClassKind::UpperSets => {
                let corners: Vec<Vec<f64>> = (0..k).map(|_| (0..d).map(|_| rng.gen()).collect()).collect();
                for (i, x) in cloud.points().enumerate() {
                    let inside = corners.iter().any(|c| match class.kind {
                        ClassKind::LowerSets => dominated(x, c),
                        _ => dominated(c, x),
                    });
                    if inside {
                        bits[i / 64] |= 1 << (i % 64);
                    }
                }
            }
            ClassKind::ConvexBodies2D => {
                // hull of k points in a random square window
                let side: f64 = rng.gen_range(0.05..1.0);
                let (ox, oy) = (rng.gen::<f64>() * (1.0 - side), rng.gen::<f64>() * (1.0 - side));
                let pts: Vec<Vec<f64>> = (0..k.max(3))
                    .map(|_| vec![ox + side * rng.gen::<f64>(), oy + side * rng.gen::<f64>()])
                    .collect();
                let tmp = PointCloud::new(2, &pts)?;
                let all: Vec<usize> = (0..pts.len()).collect();
                let hull = crate::convex::hull_indices(&tmp, &all)?;
                let poly = ConvexPolygon {
                    vertices: hull.iter().map(|&i| [pts[i][0], pts[i][1]]).collect(),
                };
                for (i, x) in cloud.points().enumerate() {
                    if poly.contains(x) {
                        bits[i / 64] |= 1 << (i % 64);
                    }
                }
            }
        }
        family.push(bits);
    }
    Ok(family)
}

/// Greedy packing count of `family` at L2(P_n) separation `eps`.
pub fn greedy_packing(family: &[Vec<u64>], n: usize, eps: f64) -> usize {
    // ||1_A - 1_B||_{L2(P_n)}^2 = |A Δ B| / n
    let threshold = eps * eps * n as f64;
    let mut centers: Vec<&Vec<u64>> = Vec::new();
    for member in family {
        let far = centers.iter().all(|c| {
            let diff: u32 = c.iter().zip(member).map(|(a, b)| (a ^ b).count_ones()).sum();
            diff as f64 > threshold
        });
        if far {
            centers.push(member);
        }
    }
    centers.len()
}

/// Packing counts over `eps_grid` and the slope estimate of `alpha`.
pub fn greedy_packing_entropy(
    class: SetClassDescriptor,
    cloud: &PointCloud,
    eps_grid: &[f64],
    config: &EntropyConfig,
) -> Result<EntropyEstimate> {
    if eps_grid.len() < 2 || eps_grid.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(Error::InvalidInput("eps grid needs at least two values in (0, 1]".into()));
    }
    let mut eps = eps_grid.to_vec();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    if eps.len() < 2 {
        return Err(Error::InvalidInput("eps grid is degenerate".into()));
    }
    let family = random_family(class, cloud, config)?;
    let counts: Vec<usize> = eps
        .par_iter()
        .map(|&e| greedy_packing(&family, cloud.len(), e))
        .collect();
    let log_packing: Vec<f64> = counts.iter().map(|&m| (m as f64).ln()).collect();
    // fit log log M against log(1/eps) away from the trivial and the
    // saturated ends
    let cap = family.len() as f64 / 4.0;
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(&counts)
        .filter(|(_, &m)| m > 1 && (m as f64) <= cap)
        .map(|(&e, &m)| ((1.0 / e).ln(), (m as f64).ln().ln()))
        .collect();
    let alpha_hat = if pts.len() >= 2 {
        (ols_slope(&pts) / 2.0).max(0.0)
    } else {
        0.0
    };
    Ok(EntropyEstimate {
        eps,
        packing_counts: counts,
        log_packing,
        family_size: family.len(),
        alpha_hat,
    })
}

fn ols_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierConfig {
    pub replications: usize,
    /// Quadrature step for the tail integral.
    pub t_step: f64,
}

impl Default for MultiplierConfig {
    fn default() -> Self {
        Self {
            replications: 64,
            t_step: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierReport {
    pub n: usize,
    pub lhs: f64,
    pub lhs_se: f64,
    /// `4 int_0^inf psi(n P(|xi| > t)) dt`.
    pub tail_rhs: f64,
    pub tail_rhs_se: f64,
    /// `E sum_k (|xi|_(k) - |xi|_(k+1)) psi(k)`.
    pub order_rhs: f64,
    pub order_rhs_se: f64,
    pub k_grid: Vec<usize>,
    pub psi_hat: Vec<f64>,
    pub psi_se: Vec<f64>,
    pub violations: usize,
    /// Largest `lhs - rhs` over both inequalities (negative when both hold).
    pub max_slack: f64,
}

/// Least concave majorant through the origin of the points `(k, psi)`,
/// evaluated by linear interpolation (constant beyond the last point).
#[derive(Debug, Clone)]
pub struct ConcaveMajorant {
    knots: Vec<(f64, f64)>,
}

impl ConcaveMajorant {
    pub fn new(points: &[(f64, f64)]) -> Self {
        let mut pts = vec![(0.0, 0.0)];
        pts.extend_from_slice(points);
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut hull: Vec<(f64, f64)> = Vec::new();
        for p in pts {
            while hull.len() >= 2 {
                let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                // drop b when it lies on or below the chord a -> p
                if (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) >= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        // a majorant of a nondecreasing target is kept nondecreasing
        let mut best = f64::NEG_INFINITY;
        for h in &mut hull {
            best = best.max(h.1);
            h.1 = best;
        }
        Self { knots: hull }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x <= 0.0 {
            return 0.0;
        }
        let j = k.partition_point(|p| p.0 < x);
        if j >= k.len() {
            return k[k.len() - 1].1;
        }
        let (a, b) = (k[j - 1], k[j]);
        a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
    }
}

/// Unnormalized `sup_C |sum_i w_i 1_C(X_i)|` for a fixed cloud and weights.
pub type SupFn<'a> = dyn Fn(&PointCloud, &[f64]) -> Result<f64> + Sync + 'a;

/// Monte Carlo check of both multiplier inequalities at sample size `n`.
pub fn multiplier_inequality_check_with(
    sup: &SupFn<'_>,
    dim: usize,
    n: usize,
    law: &MultiplierLaw,
    config: &MultiplierConfig,
    seed: u64,
) -> Result<MultiplierReport> {
    law.validate()?;
    if n == 0 || config.replications < 2 || !(config.t_step > 0.0) {
        return Err(Error::InvalidInput("need n >= 1, R >= 2 and a positive t step".into()));
    }
    let policy = SeedPolicy::new(seed);
    let reps = config.replications;

    let lhs_draws: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let id = replicate_id(n, r);
            let cloud = PointCloud::uniform(dim, n, &mut policy.rng(id, "mult-cloud"));
            let xi = law.sample(n, &mut policy.rng(id, "mult-xi"));
            sup(&cloud, &xi)
        })
        .collect::<Result<_>>()?;
    let (lhs, lhs_se) = mean_and_se(&lhs_draws);

    // psi(k) = E sup |sum_{i <= k} eps_i 1_C(X_i)| on a doubling grid
    let mut k_grid: Vec<usize> = std::iter::successors(Some(1usize), |k| Some(k * 2))
        .take_while(|&k| k < n)
        .collect();
    k_grid.push(n);
    let psi: Vec<(f64, f64)> = k_grid
        .par_iter()
        .map(|&k| {
            let draws: Vec<f64> = (0..reps)
                .map(|r| {
                    let id = replicate_id(k, r);
                    let cloud = PointCloud::uniform(dim, k, &mut policy.rng(id, "psi-cloud"));
                    let eps = MultiplierLaw::Rademacher.sample(k, &mut policy.rng(id, "psi-eps"));
                    sup(&cloud, &eps)
                })
                .collect::<Result<_>>()?;
            Ok(mean_and_se(&draws))
        })
        .collect::<Result<_>>()?;
    let psi_hat: Vec<f64> = psi.iter().map(|p| p.0).collect();
    let psi_se: Vec<f64> = psi.iter().map(|p| p.1).collect();
    let knots = |shift: f64| -> Vec<(f64, f64)> {
        k_grid
            .iter()
            .zip(&psi)
            .map(|(&k, &(m, s))| (k as f64, m + shift * s))
            .collect()
    };
    let major = ConcaveMajorant::new(&knots(0.0));
    let major_up = ConcaveMajorant::new(&knots(1.0));

    let tail_integral = |m: &ConcaveMajorant| {
        let end = law.tail_end();
        let steps = (end / config.t_step).ceil() as usize;
        // midpoint rule; the integrand is nonincreasing in t
        (0..steps)
            .map(|j| {
                let t = (j as f64 + 0.5) * config.t_step;
                m.eval(n as f64 * law.tail(t))
            })
            .sum::<f64>()
            * config.t_step
            * 4.0
    };
    let tail_rhs = tail_integral(&major);
    let tail_rhs_se = tail_integral(&major_up) - tail_rhs;

    let order_draws: Vec<(f64, f64)> = (0..reps)
        .map(|r| {
            let mut a: Vec<f64> = law
                .sample(n, &mut policy.rng(replicate_id(n, r), "order-xi"))
                .iter()
                .map(|x| x.abs())
                .collect();
            a.sort_by(|x, y| y.total_cmp(x));
            let term = |m: &ConcaveMajorant| {
                (0..n)
                    .map(|k| {
                        let next = a.get(k + 1).copied().unwrap_or(0.0);
                        (a[k] - next) * m.eval((k + 1) as f64)
                    })
                    .sum::<f64>()
            };
            (term(&major), term(&major_up))
        })
        .collect();
    let base: Vec<f64> = order_draws.iter().map(|p| p.0).collect();
    let (order_rhs, order_mc_se) = mean_and_se(&base);
    let shifted = order_draws.iter().map(|p| p.1).sum::<f64>() / reps as f64;
    let order_rhs_se = (order_mc_se.powi(2) + (shifted - order_rhs).powi(2)).sqrt();

    let mut violations = 0;
    let mut max_slack = f64::NEG_INFINITY;
    for (rhs, se) in [(tail_rhs, tail_rhs_se), (order_rhs, order_rhs_se)] {
        let gap = lhs - rhs;
        max_slack = max_slack.max(gap);
        if gap > 3.0 * (lhs_se.powi(2) + se.powi(2)).sqrt() {
            violations += 1;
        }
    }
    Ok(MultiplierReport {
        n,
        lhs,
        lhs_se,
        tail_rhs,
        tail_rhs_se,
        order_rhs,
        order_rhs_se,
        k_grid,
        psi_hat,
        psi_se,
        violations,
        max_slack,
    })
}

/// Multiplier check for a set class on fresh uniform clouds.
pub fn multiplier_inequality_check(
    class: SetClassDescriptor,
    n: usize,
    law: &MultiplierLaw,
    config: &MultiplierConfig,
    seed: u64,
) -> Result<MultiplierReport> {
    let sup = move |cloud: &PointCloud, w: &[f64]| -> Result<f64> {
        let oracle = SetOracle::new(cloud, class)?;
        absolute_sup(&oracle, w)
    };
    multiplier_inequality_check_with(&sup, class.dim, n, law, config, seed)
}
