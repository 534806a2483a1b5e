mod common;

use common::{down_set_masks, leq, members, rng, uniform_cloud};
use rand::Rng;
use setrate_core::erm::{
    classification_erm, edge_lse, estimated_region, image_lse, symmetric_difference_risk, Model, Region,
    RegressionSample, RiskMode,
};
use setrate_core::model::{PointCloud, SetClassDescriptor};

fn indicator(mask: u32, n: usize) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}

fn sample_for(model: Model, cloud: PointCloud, r: &mut rand_chacha::ChaCha8Rng) -> RegressionSample {
    let n = cloud.len();
    let y: Vec<f64> = match model {
        Model::Image => (0..n).map(|_| r.gen_range(-1.0..2.0)).collect(),
        Model::Edge { .. } => (0..n).map(|_| if r.gen_bool(0.5) { 1.0 } else { -1.0 }).collect(),
        Model::Classification { .. } => (0..n).map(|_| f64::from(u8::from(r.gen_bool(0.5)))).collect(),
    };
    RegressionSample::new(cloud, y, model).unwrap()
}

#[test]
fn erm_minimizes_loss_over_all_lower_sets() {
    let mut r = rng(41, "erm-brute");
    let models = [Model::Image, Model::Edge { a: 0.25 }, Model::Classification { b: 0.2 }];
    for trial in 0..150 {
        let model = models[trial % 3];
        let d = r.gen_range(2..=3);
        let n = r.gen_range(1..=14);
        let sample = sample_for(model, uniform_cloud(d, n, &mut r), &mut r);
        let class = SetClassDescriptor::lower(d).unwrap();
        let sel = match model {
            Model::Image => image_lse(&sample, class),
            Model::Edge { .. } => edge_lse(&sample, class),
            Model::Classification { .. } => classification_erm(&sample, class),
        }
        .unwrap();
        let got = sample.loss(&sel.indicator(n));
        let masks = down_set_masks(&sample.cloud);
        let best = masks
            .iter()
            .map(|&m| sample.loss(&indicator(m, n)))
            .fold(f64::INFINITY, f64::min);
        assert!((got - best).abs() < 1e-9, "{} loss {got} vs {best}", model.name());
        // 1000 random feasible sets never beat the ERM
        for _ in 0..1000 {
            let m = masks[r.gen_range(0..masks.len())];
            assert!(sample.loss(&indicator(m, n)) >= got - 1e-9);
        }
    }
}

#[test]
fn convex_erm_minimizes_loss() {
    let mut r = rng(42, "erm-convex");
    for _ in 0..60 {
        let n = r.gen_range(1..=10);
        let cloud = uniform_cloud(2, n, &mut r);
        let sample = sample_for(Model::Image, cloud, &mut r);
        let sel = image_lse(&sample, SetClassDescriptor::convex2d()).unwrap();
        let got = sample.loss(&sel.indicator(n));
        let best = (0u32..1 << n)
            .filter(|&m| common::is_convex_trace(&sample.cloud, &members(m, n)))
            .map(|m| sample.loss(&indicator(m, n)))
            .fold(f64::INFINITY, f64::min);
        assert!((got - best).abs() < 1e-9);
    }
}

#[test]
fn lower_set_extension_contains_exactly_the_selection() {
    let mut r = rng(43, "erm-extension");
    for _ in 0..50 {
        let d = r.gen_range(2..=3);
        let n = r.gen_range(5..=60);
        let sample = sample_for(Model::Image, uniform_cloud(d, n, &mut r), &mut r);
        let sel = image_lse(&sample, SetClassDescriptor::lower(d).unwrap()).unwrap();
        let region = estimated_region(&sel, &sample.cloud).unwrap();
        for (i, x) in sample.cloud.points().enumerate() {
            assert_eq!(region.contains(x), sel.contains(i));
        }
        // canonical extension is the smallest lower set through the selection
        for _ in 0..200 {
            let x: Vec<f64> = (0..d).map(|_| r.gen()).collect();
            let below_some = sel.indices.iter().any(|&i| leq(&x, sample.cloud.point(i)));
            assert_eq!(region.contains(&x), below_some);
        }
    }
}

fn own_mc(est: &Region, truth: &Region, samples: usize, r: &mut rand_chacha::ChaCha8Rng) -> (f64, f64) {
    let d = est.dim();
    let mut hits = 0usize;
    for _ in 0..samples {
        let x: Vec<f64> = (0..d).map(|_| r.gen()).collect();
        if est.contains(&x) != truth.contains(&x) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    (p, (p * (1.0 - p) / samples as f64).sqrt())
}

#[test]
fn exact_risk_agrees_with_monte_carlo() {
    let mut r = rng(44, "erm-risk");
    let classes = [
        SetClassDescriptor::lower(2).unwrap(),
        SetClassDescriptor::lower(3).unwrap(),
        SetClassDescriptor::convex2d(),
    ];
    for trial in 0..30 {
        let class = classes[trial % 3];
        let d = class.dim;
        let truth = Region::default_truth(d);
        let cloud = uniform_cloud(d, 80, &mut r);
        let y: Vec<f64> = cloud
            .points()
            .map(|x| f64::from(u8::from(truth.contains(x))) + 0.5 * (r.gen::<f64>() - 0.5))
            .collect();
        let sample = RegressionSample::new(cloud, y, Model::Image).unwrap();
        let sel = image_lse(&sample, class).unwrap();
        let est = estimated_region(&sel, &sample.cloud).unwrap();
        let exact = symmetric_difference_risk(&est, &truth, RiskMode::Exact).unwrap();
        let lib_mc = symmetric_difference_risk(
            &est,
            &truth,
            RiskMode::MonteCarlo {
                samples: 200_000,
                seed: trial as u64,
            },
        )
        .unwrap();
        let (p, se) = own_mc(&est, &truth, 200_000, &mut r);
        assert!((exact.value - p).abs() <= 4.0 * se.max(1e-6), "{} vs {p}", exact.value);
        assert!((exact.value - lib_mc.value).abs() <= 4.0 * lib_mc.std_error.max(1e-6));
    }
}

#[test]
fn risk_is_symmetric_and_zero_on_truth() {
    let mut r = rng(45, "erm-symmetric");
    for d in 2..=3 {
        let truth = Region::default_truth(d);
        let cloud = uniform_cloud(d, 40, &mut r);
        let sample = sample_for(Model::Image, cloud, &mut r);
        let sel = image_lse(&sample, SetClassDescriptor::lower(d).unwrap()).unwrap();
        let est = estimated_region(&sel, &sample.cloud).unwrap();
        let ab = symmetric_difference_risk(&est, &truth, RiskMode::Exact).unwrap().value;
        let ba = symmetric_difference_risk(&truth, &est, RiskMode::Exact).unwrap().value;
        assert!((ab - ba).abs() < 1e-12);
        let zero = symmetric_difference_risk(&truth, &truth, RiskMode::Exact).unwrap().value;
        assert!(zero.abs() < 1e-12);
    }
}

#[test]
fn margin_identity_for_classification() {
    // with eta = 1/2 + b (2 1_C0 - 1), |2 eta - 1| = 2b everywhere, so the
    // excess risk of A equals 2b P(A delta C0)
    let mut r = rng(46, "erm-margin");
    let b = 0.2;
    for _ in 0..10 {
        let truth = Region::default_truth(2);
        let cloud = uniform_cloud(2, 60, &mut r);
        let y: Vec<f64> = cloud
            .points()
            .map(|x| {
                let eta = 0.5 + b * if truth.contains(x) { 1.0 } else { -1.0 };
                f64::from(u8::from(r.gen::<f64>() < eta))
            })
            .collect();
        let sample = RegressionSample::new(cloud, y, Model::Classification { b }).unwrap();
        let sel = classification_erm(&sample, SetClassDescriptor::lower(2).unwrap()).unwrap();
        let est = estimated_region(&sel, &sample.cloud).unwrap();
        let m = 200_000;
        let (mut excess, mut delta) = (0.0, 0.0);
        for _ in 0..m {
            let x = [r.gen::<f64>(), r.gen::<f64>()];
            let eta = 0.5 + b * if truth.contains(&x) { 1.0 } else { -1.0 };
            let err = |inside: bool| if inside { 1.0 - eta } else { eta };
            excess += err(est.contains(&x)) - err(truth.contains(&x));
            delta += f64::from(u8::from(est.contains(&x) != truth.contains(&x)));
        }
        assert!((excess / m as f64 - 2.0 * b * delta / m as f64).abs() < 1e-12);
        let exact = symmetric_difference_risk(&est, &truth, RiskMode::Exact).unwrap().value;
        let se = (exact * (1.0 - exact) / m as f64).sqrt();
        assert!((delta / m as f64 - exact).abs() <= 4.0 * se.max(1e-6));
    }
}

#[test]
fn invalid_samples_are_rejected() {
    let cloud = PointCloud::new(2, &[vec![0.1, 0.2]]).unwrap();
    assert!(RegressionSample::new(cloud.clone(), vec![0.5], Model::Edge { a: 0.2 }).is_err());
    assert!(RegressionSample::new(cloud.clone(), vec![1.0], Model::Edge { a: 0.7 }).is_err());
    assert!(RegressionSample::new(cloud.clone(), vec![2.0], Model::Classification { b: 0.2 }).is_err());
    assert!(RegressionSample::new(cloud.clone(), vec![f64::NAN], Model::Image).is_err());
    assert!(RegressionSample::new(cloud, vec![1.0, 0.0], Model::Image).is_err());
}
