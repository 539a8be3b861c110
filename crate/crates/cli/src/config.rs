//! Flags, the flat `key = value` config file, and their merge.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use tase_core::diagram::Depth;
use tase_core::problems::NonlinearBounds;

use crate::error::CliError;
use crate::methods::MethodSpec;

#[derive(Debug, Parser)]
#[command(
    name = "tase",
    version,
    about = "TASE-RK integration and stability certification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Integrate one problem with one method and step size; trajectory CSV.
    Integrate,
    /// Stability verdicts for the splitting at the initial state; JSON.
    Certify,
    /// Largest stable step size found by bisection; CSV.
    Kstar,
    /// Boundary curves of stability diagrams; one CSV per (p, y).
    Diagram,
    /// Weighted field of values of the splitting; one CSV per q.
    Fov,
    /// Error against a reference solution over a list of step sizes; CSV.
    Convergence,
    /// Error and cost over methods and step sizes; CSV.
    Workprec,
    /// Table of That_p(y) on a logarithmic grid; CSV.
    Hatt,
}

/// Flags shared by every subcommand. Values stay textual until the merge so
/// that file and flag values go through the same parsers.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Flat `key = value` file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub problem: Option<String>,
    /// Comma list of trk2|trk3|trk4[-exact], rk4, row:<ros2|lie|file>, row-frozen:<...>.
    #[arg(long, global = true)]
    pub method: Option<String>,
    /// Comma list of orders.
    #[arg(long, global = true)]
    pub p: Option<String>,
    /// Comma list of step sizes.
    #[arg(long, global = true)]
    pub k: Option<String>,
    #[arg(long, global = true)]
    pub te: Option<String>,
    #[arg(long, global = true)]
    pub kappa: Option<String>,
    /// Comma list of weights; fractions such as 1/3 are accepted.
    #[arg(long, global = true)]
    pub q: Option<String>,
    #[arg(long, global = true)]
    pub ntheta: Option<String>,
    /// Output file, or directory for commands with several outputs.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// Problem parameter `name=value`; repeatable.
    #[arg(long = "param", global = true)]
    pub params: Vec<String>,
    /// Comma list of diagram depths `y = k lambda`; `inf` for the limit.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub y: Option<String>,
    /// Keep every n-th time step in trajectories.
    #[arg(long = "stride-t", global = true)]
    pub stride_t: Option<String>,
    /// Keep every n-th component in trajectories.
    #[arg(long = "stride-x", global = true)]
    pub stride_x: Option<String>,
    /// Reaction bounds `lb,ub` for the Fisher-Kolmogorov interval check.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub bounds: Option<String>,
    /// Restrict A and B to these indices before certification (experimental).
    #[arg(long = "experimental-subblock", global = true)]
    pub experimental_subblock: Option<String>,
    /// Write zero wall times so tables are byte-reproducible.
    #[arg(long = "no-timing", global = true)]
    pub no_timing: bool,
}

/// A `q` weight with the token it was given as (used in file names).
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem: Option<String>,
    pub params: Vec<(String, f64)>,
    pub methods: Vec<MethodSpec>,
    pub orders: Vec<usize>,
    pub k: Vec<f64>,
    pub te: Option<f64>,
    pub kappa: Option<f64>,
    pub q: Vec<Weight>,
    pub n_theta: usize,
    pub y: Vec<Depth>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub stride_t: usize,
    pub stride_x: usize,
    pub bounds: NonlinearBounds,
    pub subblock: Option<Vec<usize>>,
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: None,
            params: Vec::new(),
            methods: vec![MethodSpec::parse("trk2").expect("builtin method")],
            orders: vec![2, 3, 4],
            k: Vec::new(),
            te: None,
            kappa: None,
            q: vec![Weight {
                label: "1".into(),
                value: 1.0,
            }],
            n_theta: 720,
            y: vec![
                Depth::Finite(-1e-2),
                Depth::Finite(-1.0),
                Depth::Finite(-1e2),
                Depth::Infinite,
            ],
            out: None,
            seed: 0,
            stride_t: 1,
            stride_x: 1,
            bounds: NonlinearBounds::default(),
            subblock: None,
            timing: true,
        }
    }
}

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key} = '{value}': {why}"))
}

pub fn parse_f64(key: &str, s: &str) -> Result<f64, CliError> {
    let t = s.trim();
    let v = match t.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|e| bad(key, s, e))?;
            let d: f64 = d.trim().parse().map_err(|e| bad(key, s, e))?;
            n / d
        }
        None => t.parse().map_err(|e| bad(key, s, e))?,
    };
    if v.is_nan() {
        return Err(bad(key, s, "not a number"));
    }
    Ok(v)
}

fn parse_list<T>(
    key: &str,
    s: &str,
    item: impl Fn(&str) -> Result<T, CliError>,
) -> Result<Vec<T>, CliError> {
    let items: Vec<T> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(item)
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(bad(key, s, "empty list"));
    }
    Ok(items)
}

fn parse_usize(key: &str, s: &str) -> Result<usize, CliError> {
    s.trim().parse().map_err(|e| bad(key, s, e))
}

fn parse_positive(key: &str, s: &str) -> Result<f64, CliError> {
    let v = parse_f64(key, s)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad(key, s, "must be positive and finite"))
    }
}

fn parse_depth(s: &str) -> Result<Depth, CliError> {
    let t = s.trim().to_ascii_lowercase();
    if matches!(t.as_str(), "inf" | "-inf" | "infinity" | "-infinity") {
        return Ok(Depth::Infinite);
    }
    let y = parse_f64("y", s)?;
    if y < 0.0 && y.is_finite() {
        Ok(Depth::Finite(y))
    } else {
        Err(bad("y", s, "depth must be negative or inf"))
    }
}

impl ExperimentConfig {
    /// Applies one setting; unknown keys become problem parameters.
    pub fn set(&mut self, key: &str, value: &str, base: Option<&Path>) -> Result<(), CliError> {
        let v = value.trim();
        match key {
            "problem" => self.problem = Some(v.to_string()),
            "method" => {
                self.methods = parse_list(key, v, |m| MethodSpec::parse_relative(m, base))?;
            }
            "p" => {
                self.orders = parse_list(key, v, |s| {
                    let p = parse_usize(key, s)?;
                    if (1..=4).contains(&p) {
                        Ok(p)
                    } else {
                        Err(bad(key, s, "order must be in 1..=4"))
                    }
                })?
            }
            "k" => self.k = parse_list(key, v, |s| parse_positive(key, s))?,
            "te" => self.te = Some(parse_f64(key, v)?),
            "kappa" => self.kappa = Some(parse_positive(key, v)?),
            "q" => {
                self.q = parse_list(key, v, |s| {
                    let value = parse_f64(key, s)?;
                    if !value.is_finite() {
                        return Err(bad(key, s, "must be finite"));
                    }
                    Ok(Weight {
                        label: s.trim().replace('/', "_"),
                        value,
                    })
                })?
            }
            "ntheta" => self.n_theta = parse_usize(key, v)?,
            "out" => self.out = Some(resolve(v, base)),
            "seed" => self.seed = v.parse().map_err(|e| bad(key, v, e))?,
            "y" => self.y = parse_list(key, v, parse_depth)?,
            "stride_t" | "stride-t" => self.stride_t = parse_usize(key, v)?,
            "stride_x" | "stride-x" => self.stride_x = parse_usize(key, v)?,
            "bounds" => {
                let b = parse_list(key, v, |s| parse_f64(key, s))?;
                if b.len() != 2 {
                    return Err(bad(key, v, "expected lb,ub"));
                }
                self.bounds = NonlinearBounds::new(b[0], b[1]).map_err(|e| bad(key, v, e))?;
            }
            "experimental_subblock" | "experimental-subblock" => {
                self.subblock = Some(parse_list(key, v, |s| parse_usize(key, s))?)
            }
            "no_timing" | "no-timing" => {
                self.timing = !matches!(v, "true" | "1" | "yes");
            }
            "config" => return Err(bad(key, v, "config files do not nest")),
            other => {
                if other.is_empty() || other.contains(char::is_whitespace) {
                    return Err(bad(other, v, "invalid key"));
                }
                self.params.push((other.to_string(), parse_f64(other, v)?));
            }
        }
        Ok(())
    }

    /// Reads a flat config file; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text, path.parent())
    }

    pub fn apply_text(&mut self, text: &str, base: Option<&Path>) -> Result<(), CliError> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("config line {}: expected key = value", no + 1))
            })?;
            self.set(key.trim(), value, base)?;
        }
        Ok(())
    }

    /// Defaults, then the config file, then flags.
    pub fn from_flags(flags: &Flags) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        if let Some(path) = &flags.config {
            cfg.apply_file(path)?;
        }
        let pairs: [(&str, &Option<String>); 12] = [
            ("problem", &flags.problem),
            ("method", &flags.method),
            ("p", &flags.p),
            ("k", &flags.k),
            ("te", &flags.te),
            ("kappa", &flags.kappa),
            ("q", &flags.q),
            ("ntheta", &flags.ntheta),
            ("seed", &flags.seed),
            ("y", &flags.y),
            ("stride_t", &flags.stride_t),
            ("stride_x", &flags.stride_x),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v, None)?;
            }
        }
        if let Some(v) = &flags.bounds {
            cfg.set("bounds", v, None)?;
        }
        if let Some(v) = &flags.experimental_subblock {
            cfg.set("experimental_subblock", v, None)?;
        }
        for p in &flags.params {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--param '{p}': expected name=value")))?;
            match k.trim() {
                "kappa" | "te" => cfg.set(k.trim(), v, None)?,
                key => cfg.params.push((key.to_string(), parse_f64(key, v)?)),
            }
        }
        if let Some(out) = &flags.out {
            cfg.out = Some(out.clone());
        }
        if flags.no_timing {
            cfg.timing = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n_theta < 16 {
            return Err(CliError::Config(format!(
                "ntheta = {} must be at least 16",
                self.n_theta
            )));
        }
        if self.stride_t == 0 || self.stride_x == 0 {
            return Err(CliError::Config("strides must be at least 1".into()));
        }
        if let Some(te) = self.te {
            if !te.is_finite() {
                return Err(CliError::Config("te must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn problem_name(&self) -> Result<&str, CliError> {
        self.problem
            .as_deref()
            .ok_or_else(|| CliError::Config("--problem is required".into()))
    }

    pub fn single_k(&self) -> Result<f64, CliError> {
        match self.k.as_slice() {
            [k] => Ok(*k),
            [] => Err(CliError::Config("--k is required".into())),
            _ => Err(CliError::Config("exactly one step size expected".into())),
        }
    }
}

fn resolve(v: &str, base: Option<&Path>) -> PathBuf {
    let p = PathBuf::from(v);
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p,
    }
}
