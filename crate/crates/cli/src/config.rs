//! Run configuration. Every table rejects unknown keys, and parse errors carry
//! the JSON path of the offending field.

use std::collections::BTreeMap;
use std::path::Path;

use gradquad::problem::{CoefficientB, CoefficientFormula, Domain, ProblemSpec, Registry};
use gradquad::solve::{Damping, SolveOptions};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Option<ProblemConfig>,
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub solve: SolveConfig,
    pub branch: Option<BranchConfig>,
    #[serde(default)]
    pub outputs: OutputConfig,
    pub thresholds: Option<Vec<ThresholdRow>>,
    pub stability: Option<StabilityConfig>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Ball,
    Interval,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub domain: DomainKind,
    pub dimension: f64,
    pub coefficient: CoefficientConfig,
    pub nonlinearity: NonlinearityConfig,
    pub lambda: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientConfig {
    Constant { b: f64 },
    Tabulated { values: Vec<f64> },
    QuadraticBump { b0: f64, curvature: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub id: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "R")]
    pub r: f64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DampingConfig {
    None,
    Backtracking { factor: f64, min_step: f64 },
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    pub newton_tol: f64,
    pub newton_max: usize,
    pub monotone_tol: f64,
    pub monotone_max: usize,
    pub damping: DampingConfig,
    pub ceiling: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        let d = SolveOptions::default();
        let Damping::Backtracking { factor, min_step } = d.damping else {
            unreachable!("default damping is backtracking")
        };
        Self {
            newton_tol: d.newton_tol,
            newton_max: d.newton_max,
            monotone_tol: d.monotone_tol,
            monotone_max: 20_000,
            damping: DampingConfig::Backtracking { factor, min_step },
            ceiling: d.ceiling,
        }
    }
}

impl SolveConfig {
    pub fn options(&self) -> Result<SolveOptions, CliError> {
        let opts = SolveOptions {
            newton_tol: self.newton_tol,
            newton_max: self.newton_max,
            monotone_tol: self.monotone_tol,
            monotone_max: self.monotone_max,
            damping: match self.damping {
                DampingConfig::None => Damping::None,
                DampingConfig::Backtracking { factor, min_step } => Damping::Backtracking { factor, min_step },
            },
            ceiling: self.ceiling,
        };
        opts.validate().map_err(|e| CliError::Config(format!("solve: {e}")))?;
        Ok(opts)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchConfig {
    pub lambda_list: Option<Vec<f64>>,
    #[serde(default)]
    pub auto: bool,
    #[serde(default = "default_tol")]
    pub lambda_star_tol: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "default_true")]
    pub warm_start: bool,
}

fn default_tol() -> f64 {
    1e-3
}

fn default_q() -> f64 {
    2.0
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub csv_path: Option<String>,
    pub json_path: Option<String>,
    pub precision: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            csv_path: None,
            json_path: None,
            precision: 12,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThresholdRow {
    ConstantBPos { b: f64, beta: f64 },
    ConstantBNeg { b: f64, beta: f64 },
    GeneralB { b_lo: f64, b_hi: f64, delta: f64, eta: f64 },
    ConstantLimit { b: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    pub epsilon: Option<f64>,
}

/// Read and parse a config file. Every failure here is a configuration error.
pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("at `{path}`: {}", e.inner()))
    })
}

fn at(field: &'static str) -> impl Fn(gradquad::Error) -> CliError {
    move |e| CliError::Config(format!("at `{field}`: {e}"))
}

impl RunConfig {
    pub fn require_problem(&self, command: &str) -> Result<(&ProblemConfig, &GridConfig), CliError> {
        let p = self
            .problem
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("at `problem`: required by `{command}`")))?;
        let g = self
            .grid
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("at `grid`: required by `{command}`")))?;
        Ok((p, g))
    }

    /// The problem at `λ` (or `problem.lambda`, or 0).
    pub fn spec(&self, command: &str, lambda: Option<f64>) -> Result<ProblemSpec, CliError> {
        let (p, g) = self.require_problem(command)?;
        let domain = match p.domain {
            DomainKind::Ball => Domain::Ball { radius: g.r },
            DomainKind::Interval => Domain::Interval { length: g.r },
        };
        let coefficient = match &p.coefficient {
            CoefficientConfig::Constant { b } => CoefficientB::constant(*b),
            CoefficientConfig::Tabulated { values } => {
                if values.len() != g.m + 1 {
                    return Err(CliError::Config(format!(
                        "at `problem.coefficient.values`: expected M + 1 = {} values, found {}",
                        g.m + 1,
                        values.len()
                    )));
                }
                CoefficientB::tabulated(values.clone())
            }
            CoefficientConfig::QuadraticBump { b0, curvature } => CoefficientB::formula(
                CoefficientFormula::QuadraticBump {
                    b0: *b0,
                    curvature: *curvature,
                },
                g.r,
            ),
        }
        .map_err(at("problem.coefficient"))?;
        let g_fn = Registry::default()
            .build(&p.nonlinearity.id, &p.nonlinearity.params)
            .map_err(at("problem.nonlinearity"))?;
        let lambda = lambda.or(p.lambda).unwrap_or(0.0);
        ProblemSpec::new(domain, p.dimension, coefficient, g_fn, lambda).map_err(at("problem"))
    }

    pub fn grid_m(&self) -> usize {
        self.grid.as_ref().map_or(0, |g| g.m)
    }
}
