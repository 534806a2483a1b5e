use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClassKind, SetClassDescriptor};
use crate::suprema::MultiplierLaw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Image,
    Edge,
    Classification,
    Isotonic,
    EpSup,
    Entropy,
    MultiplierCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Image => "image",
            ExperimentKind::Edge => "edge",
            ExperimentKind::Classification => "classification",
            ExperimentKind::Isotonic => "isotonic",
            ExperimentKind::EpSup => "ep_sup",
            ExperimentKind::Entropy => "entropy",
            ExperimentKind::MultiplierCheck => "multiplier_check",
        }
    }

    /// Name of the per-replicate quantity that is aggregated and fitted.
    pub fn metric(self) -> &'static str {
        match self {
            ExperimentKind::Image | ExperimentKind::Edge => "risk",
            ExperimentKind::Classification => "excess_risk",
            ExperimentKind::Isotonic => "l2_risk",
            ExperimentKind::EpSup => "sup",
            ExperimentKind::Entropy => "alpha_hat",
            ExperimentKind::MultiplierCheck => "violations",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "image" => ExperimentKind::Image,
            "edge" => ExperimentKind::Edge,
            "classification" => ExperimentKind::Classification,
            "isotonic" => ExperimentKind::Isotonic,
            "ep_sup" => ExperimentKind::EpSup,
            "entropy" => ExperimentKind::Entropy,
            "multiplier_check" | "check_multiplier" => ExperimentKind::MultiplierCheck,
            other => return Err(Error::Spec(format!("unknown experiment kind `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Spec(format!("unknown output format `{other}`"))),
        }
    }
}

/// Everything needed to reproduce one sweep over sample sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub class: SetClassDescriptor,
    pub n_grid: Vec<usize>,
    /// Replications at the smallest `n`; later sizes use
    /// `max(min_replications, ceil(replications * n_0 / n))`.
    pub replications: usize,
    pub min_replications: usize,
    pub noise_sd: f64,
    pub a: f64,
    pub b: f64,
    pub seed: u64,
    pub statistic: Statistic,
    /// Monte Carlo risk evaluation points per training point.
    pub mc_factor: usize,
    pub law: MultiplierLaw,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl ExperimentSpec {
    /// Defaults for a kind, class and dimension; `n_grid` is left empty.
    pub fn new(kind: ExperimentKind, class: SetClassDescriptor) -> Self {
        Self {
            kind,
            class,
            n_grid: Vec::new(),
            replications: 30,
            min_replications: 30,
            noise_sd: 1.0,
            a: 0.25,
            b: 0.2,
            seed: 1,
            statistic: if kind == ExperimentKind::Classification {
                Statistic::Median
            } else {
                Statistic::Mean
            },
            mc_factor: 200,
            law: if kind == ExperimentKind::MultiplierCheck {
                MultiplierLaw::Gaussian
            } else {
                MultiplierLaw::Rademacher
            },
            out: None,
            format: OutputFormat::Csv,
        }
    }

    pub fn dim(&self) -> usize {
        self.class.dim
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kind = None;
        let mut class_kind = ClassKind::LowerSets;
        let mut dim = None;
        let mut rest: Vec<(String, String, usize)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Spec(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (k, v) = (k.trim().to_ascii_lowercase(), v.trim().to_string());
            match k.as_str() {
                "kind" | "experiment" => kind = Some(v.parse::<ExperimentKind>()?),
                "class" => class_kind = ClassKind::parse(&v)?,
                "d" | "dim" => dim = Some(parse_num::<usize>(&k, &v)?),
                _ => rest.push((k, v, lineno)),
            }
        }
        let kind = kind.ok_or_else(|| Error::Spec("missing `kind`".into()))?;
        let dim = dim.unwrap_or(2);
        let class = SetClassDescriptor::new(class_kind, dim).map_err(|e| Error::Spec(e.to_string()))?;
        let mut spec = Self::new(kind, class);
        for (k, v, lineno) in rest {
            spec.set(&k, &v).map_err(|e| match e {
                Error::Spec(m) => Error::Spec(format!("line {}: {m}", lineno + 1)),
                other => other,
            })?;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Applies one override; `kind`, `class` and `d` are fixed at parse time.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "n_grid" | "n" => {
                self.n_grid = v
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_num::<usize>(key, s))
                    .collect::<Result<_>>()?
            }
            "replications" | "r" | "r0" => self.replications = parse_num(key, v)?,
            "min_replications" => self.min_replications = parse_num(key, v)?,
            "noise_sd" => self.noise_sd = parse_num(key, v)?,
            "a" => self.a = parse_num(key, v)?,
            "b" => self.b = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "mc_factor" => self.mc_factor = parse_num(key, v)?,
            "statistic" => {
                self.statistic = match v.to_ascii_lowercase().as_str() {
                    "mean" => Statistic::Mean,
                    "median" => Statistic::Median,
                    other => return Err(Error::Spec(format!("unknown statistic `{other}`"))),
                }
            }
            "law" | "multipliers" => {
                self.law = match v.to_ascii_lowercase().as_str() {
                    "rademacher" => MultiplierLaw::Rademacher,
                    "gaussian" => MultiplierLaw::Gaussian,
                    other => return Err(Error::Spec(format!("unknown multiplier law `{other}`"))),
                }
            }
            "out" | "output" => self.out = Some(PathBuf::from(v)),
            "format" => self.format = v.parse()?,
            other => return Err(Error::Spec(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Rejects infeasible specs before any computation.
    pub fn validate(&self) -> Result<()> {
        let spec_err = |m: String| Err(Error::Spec(m));
        if self.n_grid.is_empty() {
            return spec_err("n_grid is empty".into());
        }
        if self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return spec_err("n_grid must be positive and strictly increasing".into());
        }
        if self.n_grid.iter().any(|&n| n >= 1 << 32) {
            return spec_err("sample sizes must be below 2^32".into());
        }
        let floor = if self.kind == ExperimentKind::EpSup { 2 } else { 30 };
        if self.min_replications < floor || self.replications < self.min_replications {
            return spec_err(format!(
                "need replications >= min_replications >= {floor} (got {} and {})",
                self.replications, self.min_replications
            ));
        }
        if self.replications >= 1 << 24 {
            return spec_err("too many replications".into());
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return spec_err("noise_sd must be finite and non-negative".into());
        }
        if !(self.a > 0.0 && self.a <= 0.5) {
            return spec_err(format!("a = {} outside (0, 1/2]", self.a));
        }
        if !(self.b > 0.0 && self.b <= 0.5) {
            return spec_err(format!("b = {} outside (0, 1/2]", self.b));
        }
        if self.mc_factor == 0 {
            return spec_err("mc_factor must be positive".into());
        }
        let d = self.dim();
        match self.kind {
            ExperimentKind::Isotonic if self.class.kind == ClassKind::ConvexBodies2D => {
                spec_err("isotonic regression uses the dominance order; class must be lower".into())
            }
            ExperimentKind::Image | ExperimentKind::Edge | ExperimentKind::Classification
                if self.class.kind == ClassKind::UpperSets =>
            {
                spec_err("the default truth is a lower set; use class = lower or convex".into())
            }
            _ if d > 8 => spec_err(format!("d = {d} is too large")),
            _ => Ok(()),
        }
    }

    /// `R(n) = max(min_replications, ceil(R_0 n_0 / n))`.
    pub fn replications_at(&self, n: usize) -> usize {
        let n0 = self.n_grid[0] as u128;
        let scaled = (self.replications as u128 * n0).div_ceil(n as u128) as usize;
        scaled.max(self.min_replications)
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Spec(format!("cannot parse `{v}` for `{key}`")))
}
