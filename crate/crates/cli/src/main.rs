use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use setrate_core::erm::{
    classification_erm, edge_lse, estimated_region, image_lse, Model, RegressionSample,
};
use setrate_core::harness::{
    fit_rate, predicted_rate, read_aggregate, run_experiment, ExperimentKind, ExperimentResult, ExperimentSpec,
    OutputFormat,
};
use setrate_core::isotonic::{isotonic_fit, CERTIFICATE_TOLERANCE};
use setrate_core::model::{read_numeric_rows, ClassKind, DominancePoset, PointCloud, SetClassDescriptor};
use setrate_core::oracle::SetOracle;

#[derive(Parser)]
#[command(name = "setrate", version, about = "Exact set-structured ERMs and rate experiments")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one oracle, ERM or isotonic problem on a CSV file.
    Solve(SolveArgs),
    /// Run an experiment spec.
    Simulate(ExperimentArgs),
    /// Fit a log-log rate to an aggregate table.
    Rates(RatesArgs),
    /// Empirical-process supremum sweep.
    EpSup(ExperimentArgs),
    /// Packing-entropy exponent probe.
    Entropy(ExperimentArgs),
    /// Monte Carlo check of the multiplier inequalities.
    CheckMultiplier(ExperimentArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// Spec file of `key = value` lines.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Extra `key=value` overrides, applied after the spec file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Problem {
    /// Maximize the sum of the last column over the class.
    Oracle,
    Image,
    Edge,
    Classification,
    Isotonic,
}

#[derive(Args)]
struct SolveArgs {
    /// CSV with coordinates followed by one value column.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "oracle")]
    problem: Problem,
    /// lower, upper or convex.
    #[arg(long, default_value = "lower")]
    class: String,
    /// Edge model parameter.
    #[arg(long, default_value_t = 0.25)]
    a: f64,
    /// Classification margin parameter.
    #[arg(long, default_value_t = 0.2)]
    b: f64,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RatesArgs {
    /// Aggregate CSV written by `simulate`.
    aggregate: PathBuf,
    /// Write `fit.json` and `overlay.dat` into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<setrate_core::Error>()) {
        Some(setrate_core::Error::Spec(_)) => 2,
        Some(setrate_core::Error::Certificate(_)) => 3,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::Solve(args) => solve(&args),
        Command::Simulate(args) => experiment(&args, None),
        Command::Rates(args) => rates(&args),
        Command::EpSup(args) => experiment(&args, Some(ExperimentKind::EpSup)),
        Command::Entropy(args) => experiment(&args, Some(ExperimentKind::Entropy)),
        Command::CheckMultiplier(args) => experiment(&args, Some(ExperimentKind::MultiplierCheck)),
    }
}

/// Grid used when a shorthand subcommand gets no `n_grid`.
fn default_grid(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::EpSup => "256, 512, 1024, 2048",
        ExperimentKind::Entropy => "500, 1000",
        ExperimentKind::MultiplierCheck => "64, 256",
        _ => "",
    }
}

fn load_spec(args: &ExperimentArgs, kind: Option<ExperimentKind>) -> Result<ExperimentSpec> {
    let mut text = String::new();
    if let Some(kind) = kind {
        text.push_str(&format!("kind = {}\nn_grid = {}\n", kind.name(), default_grid(kind)));
    }
    if let Some(path) = &args.spec {
        text.push_str(&fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?);
        text.push('\n');
    }
    for o in &args.overrides {
        let Some((k, v)) = o.split_once('=') else {
            return Err(setrate_core::Error::Spec(format!("override `{o}` is not KEY=VALUE")).into());
        };
        text.push_str(&format!("{} = {}\n", k.trim(), v.trim()));
    }
    if let Some(kind) = kind {
        // the subcommand fixes the kind; a conflicting file is a spec error
        let declared = ExperimentSpec::parse(&text)?.kind;
        if declared != kind {
            return Err(setrate_core::Error::Spec(format!(
                "spec declares kind `{}` but the subcommand runs `{}`",
                declared.name(),
                kind.name()
            ))
            .into());
        }
    }
    let mut spec = ExperimentSpec::parse(&text)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(out) = &args.out {
        spec.out = Some(out.clone());
    }
    if let Some(f) = args.format {
        spec.format = f.into();
    }
    spec.validate()?;
    Ok(spec)
}

fn experiment(args: &ExperimentArgs, kind: Option<ExperimentKind>) -> Result<()> {
    let spec = load_spec(args, kind)?;
    let result = run_experiment(&spec)?;
    print_summary(&result);
    let dir = spec.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    for path in result.write(&dir, spec.format)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn print_summary(result: &ExperimentResult) {
    let spec = &result.spec;
    println!(
        "{} / {} d={} alpha={} seed={}",
        spec.kind.name(),
        spec.class.kind.name(),
        spec.dim(),
        spec.class.alpha,
        spec.seed
    );
    println!("{:>8} {:>14} {:>12}", "n", spec.kind.metric(), "stderr");
    for a in &result.aggregate {
        println!("{:>8} {:>14.6} {:>12.6}", a.n, a.mean, a.stderr);
    }
    if let Some(fit) = &result.fit {
        print!("slope {:.4} (se {:.4})", fit.slope, fit.slope_se);
        if let Some(t) = &result.theory {
            print!(", predicted exponent {:.4} ({})", t.exponent, t.context);
        }
        println!();
    }
}

fn rates(args: &RatesArgs) -> Result<()> {
    let rows = read_aggregate(&args.aggregate).with_context(|| format!("reading {}", args.aggregate.display()))?;
    let Some(first) = rows.first() else {
        bail!("aggregate table {} is empty", args.aggregate.display());
    };
    let n: Vec<usize> = rows.iter().map(|r| r.n).collect();
    let means: Vec<f64> = rows.iter().map(|r| r.mean).collect();
    let ses: Vec<f64> = rows.iter().map(|r| r.stderr).collect();
    let fit = fit_rate(&n, &means, &ses)?;
    // rebuild the prediction from the table's own kind, class and dimension
    let kind: ExperimentKind = first.kind.parse()?;
    let class = SetClassDescriptor::new(ClassKind::parse(&first.class)?, first.d)?;
    let theory = predicted_rate(&ExperimentSpec::new(kind, class));
    let mut table = String::from("# n mean stderr theory fitted\n");
    for r in &rows {
        let t = theory.as_ref().map_or(f64::NAN, |(_, e, g)| {
            let raw = |x: f64| x.powf(*e) * x.ln().powf(*g);
            first.mean * raw(r.n as f64) / raw(first.n as f64)
        });
        table.push_str(&format!("{} {} {} {} {}\n", r.n, r.mean, r.stderr, t, fit.predict(r.n as f64)));
    }
    let summary = json!({
        "fit": fit,
        "theory": theory.map(|(context, exponent, log_power)| json!({
            "context": context, "exponent": exponent, "log_power": log_power,
        })),
    });
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("fit.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
            fs::write(dir.join("overlay.dat"), &table)?;
            println!("slope {:.4} (se {:.4})", fit.slope, fit.slope_se);
            println!("wrote {}", dir.display());
        }
        None => {
            println!("{}", serde_json::to_string_pretty(&summary)?);
            print!("{table}");
        }
    }
    Ok(())
}

fn read_problem(path: &Path) -> Result<(PointCloud, Vec<f64>)> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let rows = read_numeric_rows(file)?;
    let width = rows.first().map(Vec::len).unwrap_or(0);
    if width < 2 {
        bail!("{}: need at least one coordinate column and one value column", path.display());
    }
    let mut points = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for (i, row) in rows.into_iter().enumerate() {
        if row.len() != width {
            bail!("{}: row {} has {} columns, expected {width}", path.display(), i + 1, row.len());
        }
        values.push(row[width - 1]);
        points.push(row[..width - 1].to_vec());
    }
    Ok((PointCloud::new(width - 1, &points)?, values))
}

fn solve(args: &SolveArgs) -> Result<()> {
    let (cloud, values) = read_problem(&args.input)?;
    let class = SetClassDescriptor::new(ClassKind::parse(&args.class)?, cloud.dim())?;
    let output = match args.problem {
        Problem::Isotonic => {
            let poset = DominancePoset::build(&cloud);
            let fit = isotonic_fit(&poset, &values)?;
            if fit.certificate_slack > CERTIFICATE_TOLERANCE {
                return Err(setrate_core::Error::Certificate(format!(
                    "isotonic slack {} above {CERTIFICATE_TOLERANCE}",
                    fit.certificate_slack
                ))
                .into());
            }
            json!({
                "problem": "isotonic",
                "fitted": fit.point_values(&poset),
                "levels": fit.block_values.len(),
                "certificate_slack": fit.certificate_slack,
            })
        }
        Problem::Oracle => {
            let sel = SetOracle::new(&cloud, class)?.maximize(&values)?;
            json!({ "problem": "oracle", "class": class, "selection": sel })
        }
        problem => {
            let model = match problem {
                Problem::Image => Model::Image,
                Problem::Edge => Model::Edge { a: args.a },
                _ => Model::Classification { b: args.b },
            };
            let sample = RegressionSample::new(cloud, values, model)?;
            let sel = match model {
                Model::Image => image_lse(&sample, class)?,
                Model::Edge { .. } => edge_lse(&sample, class)?,
                Model::Classification { .. } => classification_erm(&sample, class)?,
            };
            let region = estimated_region(&sel, &sample.cloud)?;
            json!({
                "problem": model.name(),
                "class": class,
                "selection": sel,
                "empirical_loss": sample.loss(&sel.indicator(sample.len())),
                "region_volume": region.volume(),
            })
        }
    };
    let text = serde_json::to_string_pretty(&output)? + "\n";
    match &args.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}
