//! Versioned JSON run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::{build_h, NonlinearitySpec};
use crate::pq_core::Params;
use crate::window::{compute_window, WindowOptions, WindowReport};

pub const SCHEMA_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedLambda {
    Lower,
    Midpoint,
    Upper,
}

/// A number, or a point of the parameter window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaChoice {
    Value(f64),
    Named(NamedLambda),
}

impl std::str::FromStr for LambdaChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" => Ok(LambdaChoice::Named(NamedLambda::Lower)),
            "midpoint" => Ok(LambdaChoice::Named(NamedLambda::Midpoint)),
            "upper" => Ok(LambdaChoice::Named(NamedLambda::Upper)),
            other => other
                .parse::<f64>()
                .map(LambdaChoice::Value)
                .map_err(|_| Error::Schema(format!("lambda must be a number, lower, midpoint or upper; got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub p: f64,
    pub q: f64,
    pub gamma: f64,
    pub dim: usize,
    pub radius: f64,
    pub lambda: LambdaChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nodes: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { nodes: 2048 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierConfig {
    #[serde(default = "one")]
    pub tau: f64,
    /// Slopes compared against tau in the scaling report.
    #[serde(default = "scaling_taus")]
    pub scaling_taus: Vec<f64>,
    #[serde(default = "barrier_nodes")]
    pub nodes: usize,
    /// Collar width; defaults to a fifth of the smaller of R and the profile range.
    #[serde(default)]
    pub nu: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn scaling_taus() -> Vec<f64> {
    vec![0.5, 2.0]
}

fn barrier_nodes() -> usize {
    10_000
}

impl Default for BarrierConfig {
    fn default() -> Self {
        BarrierConfig {
            tau: 1.0,
            scaling_taus: scaling_taus(),
            nodes: barrier_nodes(),
            nu: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Absolute slack for the radial claim, as a fraction of theta2.
    #[serde(default = "claim_fraction")]
    pub claim_fraction: f64,
    /// Bound on the relative residual of computed solutions.
    #[serde(default = "residual")]
    pub residual: f64,
}

fn claim_fraction() -> f64 {
    1e-8
}

fn residual() -> f64 {
    1e-6
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            claim_fraction: claim_fraction(),
            residual: residual(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "sweep_points")]
    pub points: usize,
}

fn sweep_points() -> usize {
    5
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { points: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub version: String,
    pub problem: ProblemConfig,
    pub nonlinearity: NonlinearitySpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub window: WindowOptions,
    #[serde(default)]
    pub barrier: BarrierConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Parameters with lambda fixed and the window that fixed it.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub params: Params,
    pub window: WindowReport,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "unsupported version {:?}, expected {SCHEMA_VERSION:?}",
                self.version
            )));
        }
        if self.grid.nodes < 8 {
            return Err(Error::Schema("grid.nodes must be at least 8".into()));
        }
        if self.sweep.points < 1 {
            return Err(Error::Schema("sweep.points must be positive".into()));
        }
        if let LambdaChoice::Value(l) = self.problem.lambda {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::Schema(format!("lambda = {l} must be finite and nonnegative")));
            }
        }
        self.base_params()?;
        self.nonlinearity.check_shape()
    }

    /// Parameters with lambda = 0, for quantities that do not depend on it.
    pub fn base_params(&self) -> Result<Params> {
        let c = &self.problem;
        Params::new(c.p, c.q, c.gamma, c.dim, c.radius, 0.0)
    }

    pub fn window(&self) -> Result<WindowReport> {
        let base = self.base_params()?;
        let h = build_h(&self.nonlinearity, &base)?;
        compute_window(&base, &self.nonlinearity, &h, &self.window)
    }

    pub fn resolve(&self, choice: Option<LambdaChoice>) -> Result<Resolved> {
        let window = self.window()?;
        let lambda = match choice.unwrap_or(self.problem.lambda) {
            LambdaChoice::Value(l) => l,
            LambdaChoice::Named(NamedLambda::Lower) => window.lambda_star,
            LambdaChoice::Named(NamedLambda::Midpoint) => window.midpoint(),
            LambdaChoice::Named(NamedLambda::Upper) => window.lambda_upper,
        };
        let params = self.base_params()?.with_lambda(lambda);
        params.validate()?;
        Ok(Resolved { params, window })
    }

    /// The reference configuration: p = 2, q = 3, gamma = 1/2, N = 2, R = 1, f(t) = exp(100t/(100+t)).
    pub fn reference() -> Self {
        Config::from_json(REFERENCE_JSON).expect("reference configuration is valid")
    }
}

pub const REFERENCE_JSON: &str = r#"{
  "version": "v1",
  "problem": { "p": 2.0, "q": 3.0, "gamma": 0.5, "dim": 2, "radius": 1.0, "lambda": "midpoint" },
  "nonlinearity": {
    "reaction": { "family": "exp_saturating", "k": 100.0 },
    "theta1": 1.0,
    "theta2": 16000.0
  },
  "grid": { "nodes": 2048 }
}"#;
