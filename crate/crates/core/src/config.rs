//! JSON problem files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::admissibility::{estimate_l1, LipschitzData};
use crate::error::{Error, Result};
use crate::expr::{parse_expression, Var};
use crate::kernel::{BoundaryConfig, K_MAX};
use crate::monotone::{BracketOrder, Majorant, NonlinearProblem, RunOptions};

pub const EXAMPLE1: &str = include_str!("../configs/example1.json");
pub const EXAMPLE2: &str = include_str!("../configs/example2.json");

/// Samples per axis when `L1` has to be estimated.
pub const L1_DENSITY: usize = 41;

/// `k` as a single value or a scan window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KSpec {
    Value(f64),
    Range { lo: f64, hi: f64, steps: usize },
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LipschitzSpec {
    #[serde(rename = "L1", default, skip_serializing_if = "Option::is_none")]
    pub l1: Option<f64>,
    #[serde(rename = "L2", default, skip_serializing_if = "Option::is_none")]
    pub l2: Option<String>,
    /// Derivative bound used for the `u'` range of the Lipschitz box.
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NagumoSpec {
    Auto(AutoTag),
    Phi { phi: String },
}

/// The literal string `"auto"`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub boundary: BoundaryConfig,
    pub psi: String,
    pub lower0: String,
    pub upper0: String,
    pub ordering: BracketOrder,
    pub k: KSpec,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<LipschitzSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nagumo: Option<NagumoSpec>,
}

fn default_grid_n() -> usize {
    501
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    200
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ProblemConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        ProblemConfig::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks everything that does not need numerics: ranges and that every
    /// expression parses over its allowed variables.
    pub fn validate(&self) -> Result<()> {
        self.boundary.validate()?;
        let exprs: [(&str, &str, &[Var]); 3] = [
            ("psi", &self.psi, &[Var::X, Var::U, Var::Up]),
            ("lower0", &self.lower0, &[Var::X]),
            ("upper0", &self.upper0, &[Var::X]),
        ];
        for (name, text, allowed) in exprs {
            check_expr(name, text, allowed)?;
        }
        if let Some(l) = &self.lipschitz {
            if let Some(l2) = &l.l2 {
                check_expr("lipschitz.L2", l2, &[Var::X])?;
            }
            if l.l1.is_some_and(|v| !(v >= 0.0 && v.is_finite())) {
                return Err(Error::Config("lipschitz.L1 must be finite and >= 0".into()));
            }
            if l.p.is_some_and(|v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::Config("lipschitz.P must be finite and > 0".into()));
            }
        }
        if let Some(NagumoSpec::Phi { phi }) = &self.nagumo {
            check_expr("nagumo.phi", phi, &[Var::S])?;
        }
        if self.grid_n < 5 {
            return Err(Error::Config(format!("grid_n must be at least 5, got {}", self.grid_n)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        match self.k {
            KSpec::Value(k) if !k.is_finite() => Err(Error::Config("k must be finite".into())),
            KSpec::Range { lo, hi, steps } if !(lo < hi) || steps < 2 => Err(Error::Config(format!(
                "k range needs lo < hi and steps >= 2, got [{lo}, {hi}] x {steps}"
            ))),
            _ => Ok(()),
        }
    }

    /// The scalar `k`, if the file gives one.
    pub fn k_value(&self) -> Option<f64> {
        match self.k {
            KSpec::Value(k) => Some(k),
            KSpec::Range { .. } => None,
        }
    }

    /// Scan window: the file's range, or the whole regime matching the
    /// bracket ordering.
    pub fn k_window(&self) -> (f64, f64, usize) {
        match self.k {
            KSpec::Range { lo, hi, steps } => (lo, hi, steps),
            KSpec::Value(_) => match self.ordering {
                BracketOrder::Reverse => (0.0, K_MAX, 1000),
                BracketOrder::Well => (-10.0, -0.01, 1000),
            },
        }
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions { grid_n: self.grid_n, max_iter: self.max_iter, tol: self.tol }
    }

    /// The problem with Lipschitz data attached; `L1` is estimated when
    /// the file leaves it out.
    pub fn build(&self) -> Result<NonlinearProblem> {
        self.validate()?;
        let mut p =
            NonlinearProblem::new(self.boundary, &self.psi, &self.lower0, &self.upper0, self.ordering)?;
        let spec = self.lipschitz.clone().unwrap_or_default();
        p.derivative_bound = spec.p;
        p.nagumo_phi = match &self.nagumo {
            None => None,
            Some(NagumoSpec::Auto(_)) => Some(Majorant::Auto),
            Some(NagumoSpec::Phi { phi }) => Some(Majorant::Expr(parse_expression(phi)?)),
        };
        let l1 = match spec.l1 {
            Some(v) => v,
            None => estimate_l1(&p, L1_DENSITY)?,
        };
        let l2 = spec.l2.as_deref().unwrap_or("0");
        p.lipschitz = Some(LipschitzData::new(l1, l2)?);
        Ok(p)
    }
}

fn check_expr(name: &str, text: &str, allowed: &[Var]) -> Result<()> {
    let e = parse_expression(text).map_err(|err| Error::Config(format!("{name}: {err}")))?;
    if let Some(v) = e.disallowed_var(allowed) {
        let names: Vec<&str> = allowed.iter().map(|v| v.name()).collect();
        return Err(Error::Config(format!(
            "{name}: variable `{}` is not allowed here (allowed: {})",
            v.name(),
            names.join(", ")
        )));
    }
    Ok(())
}

/// Bundled configuration by name (`example1`, `example2`).
pub fn builtin(name: &str) -> Option<ProblemConfig> {
    let text = match name {
        "example1" => EXAMPLE1,
        "example2" => EXAMPLE2,
        _ => return None,
    };
    Some(ProblemConfig::from_json(text).expect("bundled configs are valid"))
}
