//! Method specifications and a stepper that dispatches over them.

use std::path::Path;

use tase_core::linalg::Vector;
use tase_core::rosenbrock::{RowJacobian, RowStepper, RowTableau};
use tase_core::system::SplitProblem;
use tase_core::tase::{
    ExplicitRkStepper, ExplicitTableau, JacobianMode, OneStep, TaseRk, TaseStepper, WorkStats,
};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum MethodSpec {
    Tase { p: usize, exact: bool },
    Row { tableau: RowTableau, frozen: bool },
    Rk4,
}

impl MethodSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        Self::parse_relative(s, None)
    }

    /// Tableau files named in a config file resolve against its directory.
    pub fn parse_relative(s: &str, base: Option<&Path>) -> Result<Self, CliError> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("trk") {
            let (digits, exact) = match rest.strip_suffix("-exact") {
                Some(d) => (d, true),
                None => (rest, false),
            };
            return match digits {
                "2" | "3" | "4" => Ok(MethodSpec::Tase {
                    p: digits.parse().expect("digit"),
                    exact,
                }),
                _ => Err(CliError::Config(format!(
                    "unknown method '{s}' (trk2, trk3 or trk4)"
                ))),
            };
        }
        if s == "rk4" {
            return Ok(MethodSpec::Rk4);
        }
        let (src, frozen) = if let Some(src) = s.strip_prefix("row-frozen:") {
            (src, true)
        } else if let Some(src) = s.strip_prefix("row:") {
            (src, false)
        } else {
            return Err(CliError::Config(format!(
                "unknown method '{s}' (trk2|trk3|trk4[-exact], rk4, row:<ros2|lie|file>, row-frozen:<...>)"
            )));
        };
        let tableau = match src {
            "ros2" => RowTableau::ros2(),
            "lie" => RowTableau::linear_implicit_euler(),
            path => {
                let p = Path::new(path);
                let p = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.to_path_buf(),
                };
                let text = std::fs::read_to_string(&p).map_err(|e| {
                    CliError::Config(format!("cannot read tableau {}: {e}", p.display()))
                })?;
                RowTableau::from_json(&text).map_err(|e| CliError::Config(e.to_string()))?
            }
        };
        Ok(MethodSpec::Row { tableau, frozen })
    }

    pub fn label(&self) -> String {
        match self {
            MethodSpec::Tase { p, exact: false } => format!("trk{p}"),
            MethodSpec::Tase { p, exact: true } => format!("trk{p}-exact"),
            MethodSpec::Row {
                tableau,
                frozen: false,
            } => format!("row:{}", tableau.name),
            MethodSpec::Row {
                tableau,
                frozen: true,
            } => format!("row-frozen:{}", tableau.name),
            MethodSpec::Rk4 => "rk4".into(),
        }
    }

    /// Nominal order for autonomous smooth problems, when known.
    pub fn nominal_order(&self) -> Option<usize> {
        match self {
            MethodSpec::Tase { p, .. } => Some(*p),
            MethodSpec::Rk4 => Some(4),
            MethodSpec::Row { .. } => None,
        }
    }

    pub fn stepper(&self) -> Result<Stepper, CliError> {
        Ok(match self {
            MethodSpec::Tase { p, exact } => {
                let mode = if *exact {
                    JacobianMode::Exact
                } else {
                    JacobianMode::Fixed
                };
                Stepper::Tase(TaseRk::standard(*p)?.with_jacobian(mode).stepper())
            }
            MethodSpec::Row { tableau, frozen } => {
                let mode = if *frozen {
                    RowJacobian::Frozen
                } else {
                    RowJacobian::Exact
                };
                Stepper::Row(RowStepper::new(tableau.clone(), mode)?)
            }
            MethodSpec::Rk4 => Stepper::Explicit(ExplicitRkStepper::new(ExplicitTableau::rk4())),
        })
    }
}

pub enum Stepper {
    Tase(TaseStepper),
    Row(RowStepper),
    Explicit(ExplicitRkStepper),
}

impl OneStep for Stepper {
    fn step(
        &mut self,
        problem: &SplitProblem,
        t: f64,
        u: &Vector,
        k: f64,
    ) -> tase_core::Result<Vector> {
        match self {
            Stepper::Tase(s) => s.step(problem, t, u, k),
            Stepper::Row(s) => s.step(problem, t, u, k),
            Stepper::Explicit(s) => s.step(problem, t, u, k),
        }
    }

    fn work(&self) -> WorkStats {
        match self {
            Stepper::Tase(s) => s.work(),
            Stepper::Row(s) => s.work(),
            Stepper::Explicit(s) => s.work(),
        }
    }

    fn label(&self) -> String {
        match self {
            Stepper::Tase(s) => s.label(),
            Stepper::Row(s) => s.label(),
            Stepper::Explicit(s) => s.label(),
        }
    }
}
