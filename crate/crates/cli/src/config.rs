//! Command-line flags, `key=value` config files and their merge.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

use crate::Failure;

/// Parses a decimal number or a fraction such as `5/3`.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("invalid number {s:?}"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("invalid number {s:?}"))?;
            a / b
        }
        None => s.parse().map_err(|_| format!("invalid number {s:?}"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("{s:?} is not a finite number"))
    }
}

/// Which functional `solve` minimizes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Model {
    #[default]
    Tfw,
    Tf,
}

/// Flags shared by every command. Each may also come from `--config`;
/// flags given on the command line win.
#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    /// Exponent p of the density term (accepts fractions such as 5/3).
    #[arg(long, global = true, value_parser = parse_number)]
    pub p: Option<f64>,
    /// Nuclear charge.
    #[arg(long = "Z", global = true, value_parser = parse_number)]
    pub z: Option<f64>,
    /// Coupling of the density term.
    #[arg(long, global = true, value_parser = parse_number)]
    pub gamma: Option<f64>,
    /// Coefficient of the gradient term.
    #[arg(long = "A", global = true, value_parser = parse_number)]
    pub big_a: Option<f64>,
    /// Number of radial grid nodes.
    #[arg(long, global = true)]
    pub grid_n: Option<usize>,
    /// Innermost grid radius.
    #[arg(long, global = true, value_parser = parse_number)]
    pub r_min: Option<f64>,
    /// Outermost grid radius.
    #[arg(long, global = true, value_parser = parse_number)]
    pub r_max: Option<f64>,
    /// Output path of the main CSV or report.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write an SVG plot to this path.
    #[arg(long, global = true)]
    pub svg: Option<PathBuf>,
    /// Worker threads for sweeps and checks.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Comma-separated checks to run, or `all`.
    #[arg(long, global = true)]
    pub checks: Option<String>,
    /// Lower end of the p sweep.
    #[arg(long, global = true, value_parser = parse_number)]
    pub p_min: Option<f64>,
    /// Upper end of the p sweep.
    #[arg(long, global = true, value_parser = parse_number)]
    pub p_max: Option<f64>,
    /// Number of sweep points.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Lower end of the gamma sweep.
    #[arg(long, global = true, value_parser = parse_number)]
    pub gamma_min: Option<f64>,
    /// Upper end of the gamma sweep.
    #[arg(long, global = true, value_parser = parse_number)]
    pub gamma_max: Option<f64>,
    /// Model solved by `solve`.
    #[arg(long, global = true, value_enum)]
    pub model: Option<Model>,
    /// Previously written TFW solution CSV for `verify`.
    #[arg(long, global = true)]
    pub solution: Option<PathBuf>,
    /// Plain `key=value` file supplying defaults for any of these flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

fn usage(msg: String) -> Failure {
    Failure::Usage(msg)
}

impl Flags {
    /// Reads flags from a `key=value` file. Keys are flag names without
    /// the leading dashes; `_` and `-` are interchangeable.
    pub fn from_file(path: &Path) -> Result<Self, Failure> {
        let map = tfwlab::io::read_key_values(path)?;
        Self::from_map(&map).map_err(|e| usage(format!("{}: {e}", path.display())))
    }

    fn from_map(map: &BTreeMap<String, String>) -> Result<Self, String> {
        let mut f = Flags::default();
        for (key, value) in map {
            let num = || parse_number(value).map_err(|e| format!("{key}: {e}"));
            let count = || value.parse::<usize>().map_err(|_| format!("{key}: invalid count {value:?}"));
            match key.replace('_', "-").as_str() {
                "p" => f.p = Some(num()?),
                "Z" => f.z = Some(num()?),
                "gamma" => f.gamma = Some(num()?),
                "A" => f.big_a = Some(num()?),
                "grid-n" => f.grid_n = Some(count()?),
                "r-min" => f.r_min = Some(num()?),
                "r-max" => f.r_max = Some(num()?),
                "out" => f.out = Some(PathBuf::from(value)),
                "svg" => f.svg = Some(PathBuf::from(value)),
                "jobs" => f.jobs = Some(count()?),
                "checks" => f.checks = Some(value.clone()),
                "p-min" => f.p_min = Some(num()?),
                "p-max" => f.p_max = Some(num()?),
                "steps" => f.steps = Some(count()?),
                "gamma-min" => f.gamma_min = Some(num()?),
                "gamma-max" => f.gamma_max = Some(num()?),
                "model" => f.model = Some(Model::from_str(value, true).map_err(|e| format!("model: {e}"))?),
                "solution" => f.solution = Some(PathBuf::from(value)),
                other => return Err(format!("unknown key {other:?}")),
            }
        }
        Ok(f)
    }

    /// Fills every unset flag from `base`.
    pub fn or(self, base: Flags) -> Flags {
        Flags {
            p: self.p.or(base.p),
            z: self.z.or(base.z),
            gamma: self.gamma.or(base.gamma),
            big_a: self.big_a.or(base.big_a),
            grid_n: self.grid_n.or(base.grid_n),
            r_min: self.r_min.or(base.r_min),
            r_max: self.r_max.or(base.r_max),
            out: self.out.or(base.out),
            svg: self.svg.or(base.svg),
            jobs: self.jobs.or(base.jobs),
            checks: self.checks.or(base.checks),
            p_min: self.p_min.or(base.p_min),
            p_max: self.p_max.or(base.p_max),
            steps: self.steps.or(base.steps),
            gamma_min: self.gamma_min.or(base.gamma_min),
            gamma_max: self.gamma_max.or(base.gamma_max),
            model: self.model.or(base.model),
            solution: self.solution.or(base.solution),
            config: self.config,
        }
    }

    /// Command-line flags merged over the config file, if any.
    pub fn resolve(self) -> Result<RunConfig, Failure> {
        let merged = match &self.config {
            Some(path) => {
                let base = Flags::from_file(path)?;
                self.or(base)
            }
            None => self,
        };
        if merged.jobs == Some(0) {
            return Err(usage("--jobs must be at least 1".into()));
        }
        if merged.steps == Some(0) {
            return Err(usage("--steps must be at least 1".into()));
        }
        Ok(RunConfig { flags: merged })
    }
}

/// Resolved settings of one run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub flags: Flags,
}

impl RunConfig {
    pub fn p(&self) -> f64 {
        self.flags.p.unwrap_or(5.0 / 3.0)
    }

    pub fn z(&self) -> f64 {
        self.flags.z.unwrap_or(1.0)
    }

    pub fn gamma(&self) -> f64 {
        self.flags.gamma.unwrap_or(1.0)
    }

    pub fn big_a(&self) -> f64 {
        self.flags.big_a.unwrap_or(1.0)
    }

    pub fn out_or(&self, default: &str) -> PathBuf {
        self.flags.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }

    pub fn checks(&self) -> &str {
        self.flags.checks.as_deref().unwrap_or("all")
    }
}
