//! Seeded data generators for the four statistical models. Every draw of
//! replicate `id` comes from streams derived from `(id, purpose)`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::erm::{Model, Region, RegressionSample};
use crate::error::Result;
use crate::isotonic::default_truth;
use crate::model::{DominancePoset, PointCloud, SeedPolicy};

use super::spec::ExperimentSpec;

fn cloud(spec: &ExperimentSpec, n: usize, id: u64) -> PointCloud {
    let mut rng = SeedPolicy::new(spec.seed).rng(id, "cloud");
    PointCloud::uniform(spec.dim(), n, &mut rng)
}

fn noise_rng(spec: &ExperimentSpec, id: u64) -> rand_chacha::ChaCha8Rng {
    SeedPolicy::new(spec.seed).rng(id, "noise")
}

/// The truth shared by all set experiments: `{x : sum_j x_j <= d/2}`.
pub fn truth_region(spec: &ExperimentSpec) -> Region {
    Region::default_truth(spec.dim())
}

/// `Y = 1_C0(X) + sigma * N(0, 1)`.
pub fn generate_image_data(spec: &ExperimentSpec, n: usize, id: u64) -> Result<RegressionSample> {
    let cloud = cloud(spec, n, id);
    let truth = truth_region(spec);
    let mut rng = noise_rng(spec, id);
    let y = cloud
        .points()
        .map(|x| {
            let z: f64 = rng.sample(StandardNormal);
            f64::from(u8::from(truth.contains(x))) + spec.noise_sd * z
        })
        .collect();
    RegressionSample::new(cloud, y, Model::Image)
}

/// `Y = f_C0(X) eta` with `P(eta = 1) = 1/2 + a`, so `Y = 2a f_C0(X) + xi`
/// with `E[xi | X] = 0`.
pub fn generate_edge_data(spec: &ExperimentSpec, n: usize, id: u64) -> Result<RegressionSample> {
    let cloud = cloud(spec, n, id);
    let truth = truth_region(spec);
    let mut rng = noise_rng(spec, id);
    let p = 0.5 + spec.a;
    let y = cloud
        .points()
        .map(|x| {
            let f = if truth.contains(x) { 1.0 } else { -1.0 };
            let eta = if rng.gen::<f64>() < p { 1.0 } else { -1.0 };
            f * eta
        })
        .collect();
    RegressionSample::new(cloud, y, Model::Edge { a: spec.a })
}

/// `Y | X ~ Bernoulli(1/2 + b (2 1_C0(X) - 1))`.
pub fn generate_classification_data(spec: &ExperimentSpec, n: usize, id: u64) -> Result<RegressionSample> {
    let cloud = cloud(spec, n, id);
    let truth = truth_region(spec);
    let mut rng = noise_rng(spec, id);
    let y = cloud
        .points()
        .map(|x| {
            let eta = 0.5 + spec.b * if truth.contains(x) { 1.0 } else { -1.0 };
            f64::from(u8::from(rng.gen::<f64>() < eta))
        })
        .collect();
    RegressionSample::new(cloud, y, Model::Classification { b: spec.b })
}

/// Uniform design with `Y = f0(X) + sigma * N(0, 1)` for the default
/// monotone truth.
pub fn generate_isotonic_data(spec: &ExperimentSpec, n: usize, id: u64) -> (PointCloud, DominancePoset, Vec<f64>) {
    let cloud = cloud(spec, n, id);
    let poset = DominancePoset::build(&cloud);
    let mut rng = noise_rng(spec, id);
    let y = cloud
        .points()
        .map(|x| {
            let z: f64 = rng.sample(StandardNormal);
            default_truth(x) + spec.noise_sd * z
        })
        .collect();
    (cloud, poset, y)
}
