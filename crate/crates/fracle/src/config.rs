//! Run configuration: a JSON document validated into model objects.

use std::fs;
use std::path::{Path, PathBuf};

use fracle_core::exponents::{check_pq0, check_pq1, theta_window, ExponentParams, ThetaWindow};
use fracle_core::hamiltonian::{self, HamiltonianSpec};
use fracle_core::operators::{assemble_generalized, OperatorKind, OperatorSpec};
use fracle_core::solver::{Init, Method, SolverConfig};
use fracle_core::variational::EnergyFunctional;
use fracle_core::{make_grid, DomainGrid};
use serde::{Deserialize, Serialize};

use crate::formats::read_solution;
use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub operator: OperatorConfig,
    pub exponents: ExponentConfig,
    /// Defaults to the midpoint of the admissible window.
    #[serde(default)]
    pub theta: Option<f64>,
    pub hamiltonian: String,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub extent: Vec<[f64; 2]>,
    pub n_interior: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorName {
    #[default]
    IntegralFractional,
    SpectralFractional,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    #[serde(default)]
    pub kind: OperatorName,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentConfig {
    pub n: usize,
    pub s: f64,
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitConfig {
    PositiveMode,
    File { path: PathBuf },
    ScaledMode { k: usize, amplitude: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_damping")]
    pub damping: f64,
    #[serde(default = "default_init")]
    pub init: InitConfig,
}

fn default_method() -> Method {
    Method::NewtonCoupled
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    100
}
fn default_damping() -> f64 {
    1.0
}
fn default_init() -> InitConfig {
    InitConfig::PositiveMode
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            method: default_method(),
            tol: default_tol(),
            max_iter: default_max_iter(),
            damping: default_damping(),
            init: default_init(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Relative paths resolve against the directory of the config file.
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

fn default_dir() -> PathBuf {
    PathBuf::from("fracle-out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    1e-6
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { threshold: default_threshold() }
    }
}

/// A configuration that passed every check, with the derived objects.
pub struct Prepared {
    pub config: RunConfig,
    pub base_dir: PathBuf,
    pub grid: DomainGrid,
    pub exponents: ExponentParams,
    pub window: ThetaWindow,
    pub theta: f64,
    pub hamiltonian: HamiltonianSpec,
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("config {}: {e}", path.display())))
}

fn invalid(msg: String) -> CliError {
    CliError::Invalid(msg)
}

/// Checks the exponent conditions in order `(pq0)`, `(pq1)`, `(condpq)`.
pub fn validate_exponents(c: &ExponentConfig, theta: Option<f64>) -> Result<(ExponentParams, ThetaWindow, f64), CliError> {
    let e = ExponentParams::new(c.n, c.s, c.p, c.q).map_err(|err| invalid(format!("exponents: {err}")))?;
    let n = c.n as f64;
    let sum = 1.0 / c.p + 1.0 / c.q;
    if !check_pq0(&e) {
        return Err(invalid(format!(
            "(pq0) violated: need 1 - 2s/n < 1/p + 1/q < 1, got 1 - 2s/n = {}, 1/p + 1/q = {sum}",
            1.0 - 2.0 * c.s / n
        )));
    }
    if !check_pq1(&e) {
        return Err(invalid(format!(
            "(pq1) violated: need 1/p and 1/q above (n - 4s)/(2n) = {}, got 1/p = {}, 1/q = {}",
            (n - 4.0 * c.s) / (2.0 * n),
            1.0 / c.p,
            1.0 / c.q
        )));
    }
    let window = theta_window(&e);
    if window.empty {
        return Err(invalid(format!("(condpq) violated: the theta window ({}, {}) is empty", window.lo, window.hi)));
    }
    let theta = match theta {
        Some(t) if !window.contains(t) => {
            return Err(invalid(format!(
                "(condpq) violated: theta = {t} lies outside the admissible window ({}, {})",
                window.lo, window.hi
            )))
        }
        Some(t) => t,
        None => window.midpoint().unwrap_or(1.0),
    };
    Ok((e, window, theta))
}

pub fn prepare(config: RunConfig, config_path: &Path) -> Result<Prepared, CliError> {
    let (exponents, window, theta) = validate_exponents(&config.exponents, config.theta)?;
    let extent: Vec<(f64, f64)> = config.grid.extent.iter().map(|e| (e[0], e[1])).collect();
    if extent.len() != config.grid.n_interior.len() {
        return Err(invalid(format!(
            "grid: {} extents but {} node counts",
            extent.len(),
            config.grid.n_interior.len()
        )));
    }
    let grid = make_grid(extent.len(), &extent, &config.grid.n_interior).map_err(|e| invalid(format!("grid: {e}")))?;
    let ham = hamiltonian::parse(&config.hamiltonian).map_err(|e| invalid(format!("hamiltonian: {e}")))?;
    if ham.p != exponents.p || ham.q != exponents.q {
        return Err(invalid(format!(
            "hamiltonian: growth exponents of {} are (p, q) = ({}, {}), config exponents are ({}, {})",
            ham.name, ham.p, ham.q, exponents.p, exponents.q
        )));
    }
    let s = &config.solver;
    if !(s.tol > 0.0) || s.max_iter == 0 || !(s.damping > 0.0 && s.damping <= 1.0) {
        return Err(invalid(format!(
            "solver: need tol > 0, max_iter >= 1, damping in (0, 1]; got tol = {}, max_iter = {}, damping = {}",
            s.tol, s.max_iter, s.damping
        )));
    }
    if !(config.verify.threshold > 0.0) {
        return Err(invalid(format!("verify: threshold {} must be positive", config.verify.threshold)));
    }
    let base_dir = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Prepared { config, base_dir, grid, exponents, window, theta, hamiltonian: ham })
}

impl Prepared {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.output.dir)
    }

    pub fn operator_kind(&self) -> OperatorKind {
        match self.config.operator.kind {
            OperatorName::IntegralFractional => OperatorKind::IntegralFractional(self.exponents.s),
            OperatorName::SpectralFractional => OperatorKind::SpectralFractional(self.exponents.s),
        }
    }

    pub fn functional(&self) -> Result<EnergyFunctional, CliError> {
        let op = assemble_generalized(&self.grid, &OperatorSpec::new(self.operator_kind()))
            .map_err(|e| invalid(format!("operator: {e}")))?;
        EnergyFunctional::new(op, self.theta, self.hamiltonian.clone()).map_err(|e| invalid(format!("functional: {e}")))
    }

    pub fn solver_config(&self) -> Result<SolverConfig, CliError> {
        let s = &self.config.solver;
        let init = match &s.init {
            InitConfig::PositiveMode => Init::PositiveMode,
            InitConfig::ScaledMode { k, amplitude } => Init::ScaledMode { k: *k, amplitude: *amplitude },
            InitConfig::File { path } => {
                let z = read_solution(&self.resolve(path))?;
                if *z.grid() != self.grid {
                    return Err(invalid(format!("solver init: {} was written on a different grid", path.display())));
                }
                Init::Given(z)
            }
        };
        Ok(SolverConfig { method: s.method, tol: s.tol, max_iter: s.max_iter, damping: s.damping, init })
    }
}
