use proptest::prelude::*;
use setrate_core::harness::{
    predicted_rate, read_aggregate, run_experiment, ExperimentKind, ExperimentSpec, OutputFormat,
};
use setrate_core::theory::{risk_rate, RiskModel};
use setrate_core::Error;

fn spec(text: &str) -> ExperimentSpec {
    ExperimentSpec::parse(text).unwrap()
}

#[test]
fn reruns_write_identical_bytes() {
    let text = "kind = edge\nclass = lower\nd = 3\nn_grid = 32, 64\nseed = 5\n";
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        run_experiment(&spec(text)).unwrap().write(dir.path(), OutputFormat::Csv).unwrap();
    }
    for file in ["rows.csv", "aggregate.csv", "fit.json", "overlay.dat"] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert_eq!(x, y, "{file} differs");
    }
    let rows = std::fs::read_to_string(a.path().join("rows.csv")).unwrap();
    assert!(rows.starts_with("kind,class,d,alpha,n,replicate,seed,metric,value\n"));
    let agg = std::fs::read_to_string(a.path().join("aggregate.csv")).unwrap();
    assert!(agg.starts_with("kind,class,d,alpha,n,mean,stderr\n"));
}

#[test]
fn different_seeds_change_the_data() {
    let a = run_experiment(&spec("kind = image\nd = 2\nn_grid = 40\nseed = 1\n")).unwrap();
    let b = run_experiment(&spec("kind = image\nd = 2\nn_grid = 40\nseed = 2\n")).unwrap();
    assert_ne!(a.rows, b.rows);
}

#[test]
fn rows_are_sorted_by_n_then_replicate() {
    let res = run_experiment(&spec("kind = classification\nd = 2\nn_grid = 20, 40, 80\nr0 = 60\n")).unwrap();
    let keys: Vec<(usize, usize)> = res.rows.iter().map(|r| (r.n, r.replicate)).collect();
    let mut sorted = keys.clone();
    sorted.sort_unstable();
    assert_eq!(keys, sorted);
    let counts: Vec<usize> = [20, 40, 80].iter().map(|&n| keys.iter().filter(|k| k.0 == n).count()).collect();
    assert_eq!(counts, vec![60, 30, 30]);
}

#[test]
fn overlay_uses_the_theory_exponents() {
    let cases = [
        ("kind = image\nclass = convex\nn_grid = 16, 32\n", RiskModel::Image { alpha: 0.5 }),
        ("kind = edge\nd = 3\nn_grid = 16, 32\n", RiskModel::Edge { alpha: 2.0 }),
        ("kind = classification\nd = 3\nn_grid = 16, 32\n", RiskModel::Classification { alpha: 2.0 }),
        ("kind = isotonic\nd = 2\nn_grid = 16, 32\n", RiskModel::Isotonic { d: 2 }),
    ];
    for (text, model) in cases {
        let s = spec(text);
        let want = risk_rate(model).unwrap();
        let (_, exponent, log_power) = predicted_rate(&s).unwrap();
        assert_eq!((exponent, log_power), (want.exponent, want.log_power));
        let res = run_experiment(&s).unwrap();
        let overlay = res.theory.unwrap();
        assert_eq!(overlay.exponent, want.exponent);
        assert!((overlay.curve[0].1 - res.aggregate[0].mean).abs() <= 1e-12 * res.aggregate[0].mean);
    }
    let s = spec("kind = ep_sup\nd = 3\nn_grid = 16, 32\nr0 = 4\nmin_replications = 4\n");
    assert_eq!(predicted_rate(&s).unwrap().1, 1.0 / 6.0);
}

#[test]
fn isotonic_rows_carry_certificates() {
    let res = run_experiment(&spec("kind = isotonic\nd = 3\nn_grid = 50, 100\n")).unwrap();
    let slacks: Vec<f64> = res
        .rows
        .iter()
        .filter(|r| r.metric == "certificate_slack")
        .map(|r| r.value)
        .collect();
    assert_eq!(slacks.len(), 60);
    assert!(slacks.iter().all(|&s| s <= 1e-8));
}

#[test]
fn aggregate_round_trips_and_json_output() {
    let res = run_experiment(&spec("kind = ep_sup\nd = 2\nn_grid = 16, 32, 64\nr0 = 8\nmin_replications = 4\n")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = res.write(dir.path(), OutputFormat::Csv).unwrap();
    assert!(files.iter().any(|f| f.ends_with("ep_sup.csv")));
    let sup = std::fs::read_to_string(dir.path().join("ep_sup.csv")).unwrap();
    assert!(sup.starts_with("class,d,alpha,n,sigma,R,mean_sup,stderr,seed\n"));
    assert_eq!(read_aggregate(&dir.path().join("aggregate.csv")).unwrap(), res.aggregate);
    let json = tempfile::tempdir().unwrap();
    res.write(json.path(), OutputFormat::Json).unwrap();
    let text = std::fs::read_to_string(json.path().join("rows.json")).unwrap();
    let rows: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), res.rows.len());
}

#[test]
fn invalid_specs_are_structured_errors() {
    let bad = [
        "",
        "class = lower\nn_grid = 10\n",
        "kind = image\nn_grid = 20, 10\n",
        "kind = image\nn_grid = 10\nreplications = 5\n",
        "kind = edge\nn_grid = 10\na = 0.7\n",
        "kind = classification\nn_grid = 10\nb = 0\n",
        "kind = isotonic\nclass = convex\nn_grid = 10\n",
        "kind = image\nclass = upper\nn_grid = 10\n",
        "kind = image\nclass = convex\nd = 3\nn_grid = 10\n",
        "kind = nonsense\nn_grid = 10\n",
        "kind = image\nn_grid = ten\n",
        "kind = image\nn_grid = 10\nunknown = 1\n",
        "kind = image\nn_grid = 10\nformat = xml\n",
        "no equals sign here\n",
    ];
    for text in bad {
        assert!(matches!(ExperimentSpec::parse(text), Err(Error::Spec(_))), "{text:?}");
    }
}

#[test]
fn replication_schedule() {
    let s = spec("kind = image\nn_grid = 64, 128, 256, 512\nr0 = 120\n");
    let r: Vec<usize> = s.n_grid.iter().map(|&n| s.replications_at(n)).collect();
    assert_eq!(r, vec![120, 60, 30, 30]);
    assert_eq!(s.kind, ExperimentKind::Image);
}

proptest! {
    #[test]
    fn parser_never_panics(text in "[a-z_=0-9,.# \n-]{0,120}") {
        let _ = ExperimentSpec::parse(&text);
    }

    #[test]
    fn parser_accepts_any_valid_grid(mut grid in proptest::collection::vec(1usize..100_000, 1..8), seed in any::<u64>()) {
        grid.sort_unstable();
        grid.dedup();
        let list: Vec<String> = grid.iter().map(|n| n.to_string()).collect();
        let text = format!("kind = image\nn_grid = {}\nseed = {seed}\n", list.join(", "));
        let s = ExperimentSpec::parse(&text).unwrap();
        prop_assert_eq!(s.n_grid, grid);
        prop_assert_eq!(s.seed, seed);
    }
}
