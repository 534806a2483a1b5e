//! Experiment runner: generates data, fits estimators, evaluates risks or
//! suprema, aggregates per sample size and fits log-log rates.

mod fit;
mod generate;
mod spec;

pub use fit::{fit_rate, RateFit};
pub use generate::{
    generate_classification_data, generate_edge_data, generate_image_data, generate_isotonic_data, truth_region,
};
pub use spec::{ExperimentKind, ExperimentSpec, OutputFormat, Statistic};

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::erm::{classification_erm, edge_lse, estimated_region, image_lse, risk_auto, RegressionSample};
use crate::error::{Error, Result};
use crate::isotonic::{default_truth, isotonic_fit, l2_risk, CERTIFICATE_TOLERANCE};
use crate::model::{PointCloud, SeedPolicy, SetClassDescriptor};
use crate::suprema::{
    default_eps_grid, greedy_packing_entropy, mean_and_se, multiplier_inequality_check, replicate_id, sup_replicate,
    EntropyConfig, MultiplierConfig,
};
use crate::theory::{risk_rate, RiskModel};

/// One measured value; the frozen row schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub kind: String,
    pub class: String,
    pub d: usize,
    pub alpha: f64,
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
}

/// Per-n summary of the primary metric. With the median statistic the
/// `mean` column holds the median.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub kind: String,
    pub class: String,
    pub d: usize,
    pub alpha: f64,
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
}

/// Row schema of the supremum table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupRow {
    pub class: String,
    pub d: usize,
    pub alpha: f64,
    pub n: usize,
    pub sigma: f64,
    #[serde(rename = "R")]
    pub r: usize,
    pub mean_sup: f64,
    pub stderr: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryOverlay {
    pub context: String,
    pub exponent: f64,
    pub log_power: f64,
    /// Predicted values normalized to the measured statistic at the
    /// smallest `n`.
    pub curve: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub rows: Vec<Row>,
    pub aggregate: Vec<AggregateRow>,
    pub fit: Option<RateFit>,
    pub theory: Option<TheoryOverlay>,
}

fn class_label(class: SetClassDescriptor) -> String {
    class.kind.name().to_string()
}

fn metric_rows(spec: &ExperimentSpec, n: usize, replicate: usize, seed: u64, values: Vec<(&str, f64)>) -> Vec<Row> {
    values
        .into_iter()
        .map(|(metric, value)| Row {
            kind: spec.kind.name().into(),
            class: class_label(spec.class),
            d: spec.dim(),
            alpha: spec.class.alpha,
            n,
            replicate,
            seed,
            metric: metric.into(),
            value,
        })
        .collect()
}

fn set_risk(spec: &ExperimentSpec, sample: &RegressionSample, id: u64) -> Result<f64> {
    let sel = match spec.kind {
        ExperimentKind::Image => image_lse(sample, spec.class)?,
        ExperimentKind::Edge => edge_lse(sample, spec.class)?,
        _ => classification_erm(sample, spec.class)?,
    };
    let est = estimated_region(&sel, &sample.cloud)?;
    let eval_seed = SeedPolicy::new(spec.seed).derive_stream(id, "risk");
    let risk = risk_auto(&est, &truth_region(spec), spec.mc_factor * sample.len(), eval_seed)?;
    Ok(risk.value)
}

/// Metrics of replicate `r` at size `n`, primary metric first.
pub fn run_replicate(spec: &ExperimentSpec, n: usize, r: usize) -> Result<Vec<(&'static str, f64)>> {
    let id = replicate_id(n, r);
    let policy = SeedPolicy::new(spec.seed);
    let metric = spec.kind.metric();
    Ok(match spec.kind {
        ExperimentKind::Image => vec![(metric, set_risk(spec, &generate_image_data(spec, n, id)?, id)?)],
        ExperimentKind::Edge => vec![(metric, set_risk(spec, &generate_edge_data(spec, n, id)?, id)?)],
        ExperimentKind::Classification => {
            let sample = generate_classification_data(spec, n, id)?;
            vec![(metric, 2.0 * spec.b * set_risk(spec, &sample, id)?)]
        }
        ExperimentKind::Isotonic => {
            let (_, poset, y) = generate_isotonic_data(spec, n, id);
            let fit = isotonic_fit(&poset, &y)?;
            if fit.certificate_slack > CERTIFICATE_TOLERANCE {
                return Err(Error::Certificate(format!(
                    "isotonic slack {} at n = {n}, replicate {r}",
                    fit.certificate_slack
                )));
            }
            let risk = l2_risk(
                &fit,
                &poset,
                default_truth,
                spec.mc_factor * n,
                policy.derive_stream(id, "risk"),
            )?;
            vec![(metric, risk.value), ("certificate_slack", fit.certificate_slack)]
        }
        ExperimentKind::EpSup => vec![(metric, sup_replicate(spec.class, n, &spec.law, policy, id)?)],
        ExperimentKind::Entropy => {
            let cloud = PointCloud::uniform(spec.dim(), n, &mut policy.rng(id, "cloud"));
            let config = EntropyConfig {
                seed: policy.derive_stream(id, "family"),
                ..EntropyConfig::default()
            };
            let e = greedy_packing_entropy(spec.class, &cloud, &default_eps_grid(), &config)?;
            vec![(metric, e.alpha_hat)]
        }
        ExperimentKind::MultiplierCheck => {
            let report = multiplier_inequality_check(
                spec.class,
                n,
                &spec.law,
                &MultiplierConfig::default(),
                policy.derive_stream(id, "multiplier"),
            )?;
            vec![(metric, report.violations as f64), ("max_slack", report.max_slack)]
        }
    })
}

fn summarize(values: &[f64], statistic: Statistic) -> (f64, f64) {
    let (mean, se) = mean_and_se(values);
    match statistic {
        Statistic::Mean => (mean, se),
        Statistic::Median => {
            let mut v = values.to_vec();
            v.sort_by(f64::total_cmp);
            let k = v.len();
            let median = if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) };
            // asymptotic efficiency of the median under normality
            (median, se * (std::f64::consts::PI / 2.0).sqrt())
        }
    }
}

/// Exponent-level prediction for the experiment's primary metric, if one exists.
pub fn predicted_rate(spec: &ExperimentSpec) -> Option<(String, f64, f64)> {
    let alpha = spec.class.alpha;
    let risk = |model| risk_rate(model).ok().map(|p| (p.context.to_string(), p.exponent, p.log_power));
    match spec.kind {
        ExperimentKind::Image => risk(RiskModel::Image { alpha }),
        ExperimentKind::Edge => risk(RiskModel::Edge { alpha }),
        ExperimentKind::Classification => risk(RiskModel::Classification { alpha }),
        ExperimentKind::Isotonic => risk(RiskModel::Isotonic { d: spec.dim() }),
        ExperimentKind::EpSup => {
            let exponent = if alpha > 1.0 {
                (alpha - 1.0) / (2.0 * (alpha + 1.0))
            } else {
                0.0
            };
            Some(("symmetrized supremum".into(), exponent, 0.0))
        }
        ExperimentKind::Entropy | ExperimentKind::MultiplierCheck => None,
    }
}

fn overlay(spec: &ExperimentSpec, aggregate: &[AggregateRow]) -> Option<TheoryOverlay> {
    let (context, exponent, log_power) = predicted_rate(spec)?;
    let first = aggregate.first()?;
    let raw = |n: usize| {
        let x = n as f64;
        x.powf(exponent) * x.ln().powf(log_power)
    };
    let curve = aggregate
        .iter()
        .map(|a| (a.n, first.mean * raw(a.n) / raw(first.n)))
        .collect();
    Some(TheoryOverlay {
        context,
        exponent,
        log_power,
        curve,
    })
}

/// Runs every `(n, replicate)` task and aggregates. Output order is
/// `(n, replicate)` regardless of scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let tasks: Vec<(usize, usize)> = spec
        .n_grid
        .iter()
        .flat_map(|&n| (0..spec.replications_at(n)).map(move |r| (n, r)))
        .collect();
    let policy = SeedPolicy::new(spec.seed);
    let outputs: Vec<Vec<(&str, f64)>> = tasks
        .par_iter()
        .map(|&(n, r)| run_replicate(spec, n, r))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (&(n, r), values) in tasks.iter().zip(outputs) {
        let seed = policy.derive_stream(replicate_id(n, r), "cloud");
        rows.extend(metric_rows(spec, n, r, seed, values));
    }
    let primary = spec.kind.metric();
    let aggregate: Vec<AggregateRow> = spec
        .n_grid
        .iter()
        .map(|&n| {
            let values: Vec<f64> = rows
                .iter()
                .filter(|row| row.n == n && row.metric == primary)
                .map(|row| row.value)
                .collect();
            let (mean, stderr) = summarize(&values, spec.statistic);
            AggregateRow {
                kind: spec.kind.name().into(),
                class: class_label(spec.class),
                d: spec.dim(),
                alpha: spec.class.alpha,
                n,
                mean,
                stderr,
            }
        })
        .collect();
    let fit = if predicted_rate(spec).is_some() && spec.n_grid.len() >= 2 {
        let means: Vec<f64> = aggregate.iter().map(|a| a.mean).collect();
        let ses: Vec<f64> = aggregate.iter().map(|a| a.stderr).collect();
        fit_rate(&spec.n_grid, &means, &ses).ok()
    } else {
        None
    };
    let theory = overlay(spec, &aggregate);
    Ok(ExperimentResult {
        spec: spec.clone(),
        rows,
        aggregate,
        fit,
        theory,
    })
}

impl ExperimentResult {
    /// Supremum table rows (only for `ep_sup` experiments).
    pub fn sup_rows(&self) -> Vec<SupRow> {
        if self.spec.kind != ExperimentKind::EpSup {
            return Vec::new();
        }
        self.aggregate
            .iter()
            .map(|a| SupRow {
                class: a.class.clone(),
                d: a.d,
                alpha: a.alpha,
                n: a.n,
                sigma: 1.0,
                r: self.spec.replications_at(a.n),
                mean_sup: a.mean,
                stderr: a.stderr,
                seed: self.spec.seed,
            })
            .collect()
    }

    /// Whitespace table `n mean stderr theory fitted` for gnuplot.
    pub fn overlay_table(&self) -> String {
        let mut s = String::from("# n mean stderr theory fitted\n");
        for (i, a) in self.aggregate.iter().enumerate() {
            let theory = self.theory.as_ref().map_or(f64::NAN, |t| t.curve[i].1);
            let fitted = self.fit.as_ref().map_or(f64::NAN, |f| f.predict(a.n as f64));
            s.push_str(&format!("{} {} {} {} {}\n", a.n, a.mean, a.stderr, theory, fitted));
        }
        s
    }

    /// Writes tables, the fit summary and the overlay into `dir`; returns
    /// the files written.
    pub fn write(&self, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        match format {
            OutputFormat::Csv => {
                written.push(write_csv(&dir.join("rows.csv"), &self.rows)?);
                written.push(write_csv(&dir.join("aggregate.csv"), &self.aggregate)?);
                if self.spec.kind == ExperimentKind::EpSup {
                    written.push(write_csv(&dir.join("ep_sup.csv"), &self.sup_rows())?);
                }
            }
            OutputFormat::Json => {
                written.push(write_json(&dir.join("rows.json"), &self.rows)?);
                written.push(write_json(&dir.join("aggregate.json"), &self.aggregate)?);
                if self.spec.kind == ExperimentKind::EpSup {
                    written.push(write_json(&dir.join("ep_sup.json"), &self.sup_rows())?);
                }
            }
        }
        let summary = serde_json::json!({
            "spec": self.spec,
            "fit": self.fit,
            "theory": self.theory,
        });
        written.push(write_json(&dir.join("fit.json"), &summary)?);
        let path = dir.join("overlay.dat");
        fs::write(&path, self.overlay_table())?;
        written.push(path);
        Ok(written)
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<PathBuf> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(path.to_path_buf())
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<PathBuf> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(path.to_path_buf())
}

/// Reads an aggregate table written by [`ExperimentResult::write`].
pub fn read_aggregate(path: &Path) -> Result<Vec<AggregateRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows: Vec<AggregateRow> = r.deserialize().collect::<std::result::Result<_, _>>()?;
    Ok(rows)
}
