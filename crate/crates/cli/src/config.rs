//! Run configuration: a single TOML file with nested sections, every key
//! optional with documented defaults.  CLI flags override file values and
//! `print-config` emits the full default set, so any run is reproducible
//! from one artifact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use hjnet::cauchy::{BoundaryTrace, CauchyProblem, InitialData};
use hjnet::hamiltonian::{HamiltonianKind, HamiltonianSpec, SchemeConstants, SourceTerm};
use hjnet::lab::{
    manufactured_cauchy, manufactured_stationary, DxRule, ManufacturedCauchy,
    ManufacturedStationary,
};
use hjnet::stationary::{far_end_fallback, StationaryProblem};

/// Sampling density used when deriving scheme constants for catalog
/// problems (manufactured problems use the laboratory's own density).
const CONFIG_DENSITY: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub numerics: NumericsConfig,
    pub study: StudyConfig,
    pub run: RunSection,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    /// Number of edges K ≥ 2.
    pub edges: usize,
    /// Truncation length ℓ of every edge.
    pub edge_length: f64,
    /// Catalog name: abs | quadratic | shifted_quadratic | poly.
    pub hamiltonian: String,
    /// Offset a of shifted_quadratic: H(p) = (p − a)².
    pub shift: f64,
    /// Ascending-degree coefficients of poly.
    pub poly_coeffs: Vec<f64>,
    /// Source name: zero | constant | sin_profile | custom_table | manufactured.
    pub source: String,
    pub constant_value: f64,
    /// Per-edge c_i of sin_profile: f_i(x) = c_i sin x.
    pub sin_coeffs: Vec<f64>,
    /// CSV file of `edge,x,value` rows (1-based edges) for custom_table.
    pub table_path: String,
    /// Manufactured-solution coefficients c_i (Σc_i = B).
    pub coefficients: Vec<f64>,
    /// Per-edge far-end Dirichlet values for catalog problems.  Empty
    /// selects the doubled-domain pre-solve fallback; its sensitivity to
    /// the truncation length is the user's to check (the laboratory
    /// reports it for the manufactured family).
    pub far_end: Vec<f64>,
    /// Junction flux constant B.
    pub b: f64,
    /// Time horizon T of Cauchy runs.
    pub horizon: f64,
    /// Initial data for non-manufactured Cauchy runs:
    /// zero | constant | sin_profile | manufactured.
    pub initial: String,
    pub initial_value: f64,
    pub initial_coeffs: Vec<f64>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            edges: 3,
            edge_length: 5.0,
            hamiltonian: "quadratic".into(),
            shift: 0.0,
            poly_coeffs: Vec::new(),
            source: "manufactured".into(),
            constant_value: 0.0,
            sin_coeffs: Vec::new(),
            table_path: String::new(),
            coefficients: vec![1.0, 1.0, -2.0],
            far_end: Vec::new(),
            b: 0.0,
            horizon: 1.0,
            initial: "manufactured".into(),
            initial_value: 0.0,
            initial_coeffs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub dx: f64,
    /// Artificial viscosity; 0 selects the coupled value 2·L₁·Δx.
    pub eps: f64,
    /// Time step; 0 selects the CFL-respecting suggestion.
    pub dt: f64,
    /// Solver tolerance; 0 selects the default 1e−10·(1 + M).
    pub tol_solve: f64,
    pub max_sweeps: u64,
    /// θ-scan resolution of the junction verifier.
    pub theta_points: usize,
    /// Junction slope order for verification: 1 or 2.
    pub slope_order: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            dx: 0.05,
            eps: 0.0,
            dt: 0.0,
            tol_solve: 0.0,
            max_sweeps: 1_000_000,
            theta_points: 1000,
            slope_order: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// stationary | cauchy.
    pub kind: String,
    pub dx_list: Vec<f64>,
    pub eps_list: Vec<f64>,
    /// Cauchy self-convergence reference at Δx_min / ref_divisor.
    pub ref_divisor: u32,
    pub dx_rule_scale: f64,
    pub dx_rule_power: f64,
    /// Acceptance threshold on the fitted order; 0 disables the gate.
    pub min_order: f64,
    pub node_budget: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            kind: "stationary".into(),
            dx_list: vec![0.1, 0.05, 0.025],
            eps_list: vec![0.4, 0.2, 0.1],
            ref_divisor: 4,
            dx_rule_scale: 0.25,
            dx_rule_power: 1.5,
            min_order: 0.0,
            node_budget: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Worker threads for study rows: 0 = available parallelism,
    /// 1 = strictly sequential.  The HJNET_WORKERS environment variable
    /// overrides the file; a --workers flag overrides both.
    pub workers: usize,
    /// Monotonicity certification trials.
    pub trials: usize,
    /// Seed of the deterministic generator used by certification.
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            workers: 0,
            trials: 100,
            seed: 20_240_601,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    pub solution: String,
    pub rates: String,
    pub summary: String,
    pub junction: String,
    pub certificate: String,
    /// Write every k-th time level of a Cauchy solution.
    pub time_stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: "out".into(),
            solution: "solution.csv".into(),
            rates: "rates.csv".into(),
            summary: "summary.csv".into(),
            junction: "junction.csv".into(),
            certificate: "certificate.csv".into(),
            time_stride: 1,
        }
    }
}

/// Configuration errors name the offending field so the exit-2 message is
/// actionable.
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.into(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|e| err("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| err("config", e.to_string()))
    }

    pub fn emit(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.problem.edges < 2 {
            return Err(err("problem.edges", "need at least 2 edges"));
        }
        if !(self.problem.edge_length > 0.0) {
            return Err(err("problem.edge_length", "must be positive"));
        }
        if !(self.numerics.dx > 0.0) {
            return Err(err("numerics.dx", "must be positive"));
        }
        if !(self.problem.horizon > 0.0) {
            return Err(err("problem.horizon", "must be positive"));
        }
        if self.numerics.slope_order != 1 && self.numerics.slope_order != 2 {
            return Err(err("numerics.slope_order", "must be 1 or 2"));
        }
        match self.study.kind.as_str() {
            "stationary" | "cauchy" => {}
            other => {
                return Err(err(
                    "study.kind",
                    format!("unknown kind `{other}` (stationary | cauchy)"),
                ))
            }
        }
        self.hamiltonian_kind()?;
        Ok(())
    }

    pub fn hamiltonian_kind(&self) -> Result<HamiltonianKind, ConfigError> {
        match self.problem.hamiltonian.as_str() {
            "abs" => Ok(HamiltonianKind::Abs),
            "quadratic" => Ok(HamiltonianKind::Quadratic),
            "shifted_quadratic" => Ok(HamiltonianKind::ShiftedQuadratic(self.problem.shift)),
            "poly" => {
                if self.problem.poly_coeffs.is_empty() {
                    return Err(err("problem.poly_coeffs", "poly needs coefficients"));
                }
                Ok(HamiltonianKind::Poly(self.problem.poly_coeffs.clone()))
            }
            other => Err(err(
                "problem.hamiltonian",
                format!(
                    "unknown catalog entry `{other}` (abs | quadratic | shifted_quadratic | poly)"
                ),
            )),
        }
    }

    pub fn is_manufactured(&self) -> bool {
        self.problem.source == "manufactured"
    }

    fn catalog_source(&self) -> Result<SourceTerm, ConfigError> {
        let k = self.problem.edges;
        match self.problem.source.as_str() {
            "zero" => Ok(SourceTerm::Zero),
            "constant" => Ok(SourceTerm::Constant(self.problem.constant_value)),
            "sin_profile" => {
                if self.problem.sin_coeffs.len() != k {
                    return Err(err(
                        "problem.sin_coeffs",
                        format!("need {k} per-edge coefficients"),
                    ));
                }
                Ok(SourceTerm::SinProfile(self.problem.sin_coeffs.clone()))
            }
            "custom_table" => {
                let tables = load_table(&self.problem.table_path, k)?;
                Ok(SourceTerm::Table(tables))
            }
            other => Err(err(
                "problem.source",
                format!(
                    "unknown source `{other}` (zero | constant | sin_profile | custom_table | manufactured)"
                ),
            )),
        }
    }

    pub fn manufactured_stationary(&self) -> Result<ManufacturedStationary, ConfigError> {
        if self.problem.coefficients.len() != self.problem.edges {
            return Err(err(
                "problem.coefficients",
                format!("need {} per-edge coefficients", self.problem.edges),
            ));
        }
        manufactured_stationary(
            &self.problem.coefficients,
            self.hamiltonian_kind()?,
            self.problem.edge_length,
            self.problem.b,
        )
        .map_err(|e| err("problem.coefficients", e.to_string()))
    }

    pub fn manufactured_cauchy(&self) -> Result<ManufacturedCauchy, ConfigError> {
        if self.problem.coefficients.len() != self.problem.edges {
            return Err(err(
                "problem.coefficients",
                format!("need {} per-edge coefficients", self.problem.edges),
            ));
        }
        manufactured_cauchy(
            &self.problem.coefficients,
            self.hamiltonian_kind()?,
            self.problem.edge_length,
            self.problem.horizon,
        )
        .map_err(|e| err("problem.coefficients", e.to_string()))
    }

    /// Stationary problem: manufactured problems carry their exact far-end
    /// trace; catalog problems fall back to the doubled-domain pre-solve.
    pub fn stationary_problem(&self) -> Result<StationaryProblem, Box<dyn std::error::Error>> {
        if self.is_manufactured() {
            return Ok(self.manufactured_stationary()?.problem());
        }
        let kind = self.hamiltonian_kind()?;
        let source = self.catalog_source()?;
        let spec = HamiltonianSpec::uniform(self.problem.edges, kind, source)?;
        let consts = SchemeConstants::derive(&spec, self.problem.edge_length, 0.0, CONFIG_DENSITY)?;
        let far_end = if self.problem.far_end.is_empty() {
            far_end_fallback(&spec, &consts, self.problem.edge_length, self.numerics.dx)?
        } else {
            if self.problem.far_end.len() != self.problem.edges {
                return Err(Box::new(err(
                    "problem.far_end",
                    format!("need {} per-edge values", self.problem.edges),
                )));
            }
            self.problem.far_end.clone()
        };
        Ok(StationaryProblem::new(
            spec,
            consts,
            self.problem.edge_length,
            self.problem.b,
            far_end,
        )?)
    }

    fn initial_data(&self) -> Result<InitialData, ConfigError> {
        let k = self.problem.edges;
        match self.problem.initial.as_str() {
            "zero" => Ok(InitialData::Constant(0.0)),
            "constant" => Ok(InitialData::Constant(self.problem.initial_value)),
            "sin_profile" | "manufactured" => {
                let coeffs = if self.problem.initial == "manufactured" {
                    &self.problem.coefficients
                } else {
                    &self.problem.initial_coeffs
                };
                if coeffs.len() != k {
                    return Err(err(
                        "problem.initial_coeffs",
                        format!("need {k} per-edge coefficients"),
                    ));
                }
                Ok(InitialData::SinProfile(coeffs.clone()))
            }
            other => Err(err(
                "problem.initial",
                format!("unknown initial data `{other}`"),
            )),
        }
    }

    /// Cauchy problem: catalog sources use the constant-in-time extension
    /// of u₀ at the far node as the Dirichlet trace.
    pub fn cauchy_problem(&self) -> Result<CauchyProblem, Box<dyn std::error::Error>> {
        if self.is_manufactured() {
            return Ok(self.manufactured_cauchy()?.problem());
        }
        let kind = self.hamiltonian_kind()?;
        let source = self.catalog_source()?;
        let spec = HamiltonianSpec::uniform(self.problem.edges, kind, source)?;
        let consts = SchemeConstants::derive(
            &spec,
            self.problem.edge_length,
            self.problem.horizon,
            CONFIG_DENSITY,
        )?;
        let u0 = self.initial_data()?;
        let far: Vec<f64> = if self.problem.far_end.is_empty() {
            (0..self.problem.edges)
                .map(|i| u0.eval(i, -self.problem.edge_length))
                .collect()
        } else {
            if self.problem.far_end.len() != self.problem.edges {
                return Err(Box::new(err(
                    "problem.far_end",
                    format!("need {} per-edge values", self.problem.edges),
                )));
            }
            self.problem.far_end.clone()
        };
        Ok(CauchyProblem::new(
            spec,
            consts,
            u0,
            self.problem.horizon,
            self.problem.b,
            BoundaryTrace::Constant(far),
            self.problem.edge_length,
        )?)
    }

    pub fn dx_rule(&self) -> DxRule {
        DxRule {
            scale: self.study.dx_rule_scale,
            power: self.study.dx_rule_power,
        }
    }
}

/// Load a per-edge piecewise-linear table from a CSV of `edge,x,value`
/// rows with 1-based edge indices.
fn load_table(path: &str, edges: usize) -> Result<Vec<Vec<(f64, f64)>>, ConfigError> {
    if path.is_empty() {
        return Err(err("problem.table_path", "custom_table needs a file path"));
    }
    let text = fs::read_to_string(path)
        .map_err(|e| err("problem.table_path", format!("cannot read {path}: {e}")))?;
    let mut tables = vec![Vec::new(); edges];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(err(
                "problem.table_path",
                format!("line {}: expected edge,x,value", lineno + 1),
            ));
        }
        let edge: usize = parts[0].parse().map_err(|_| {
            err(
                "problem.table_path",
                format!("line {}: bad edge index", lineno + 1),
            )
        })?;
        if edge == 0 || edge > edges {
            return Err(err(
                "problem.table_path",
                format!("line {}: edge {} out of 1..={edges}", lineno + 1, edge),
            ));
        }
        let x: f64 = parts[1]
            .parse()
            .map_err(|_| err("problem.table_path", format!("line {}: bad x", lineno + 1)))?;
        let v: f64 = parts[2].parse().map_err(|_| {
            err(
                "problem.table_path",
                format!("line {}: bad value", lineno + 1),
            )
        })?;
        tables[edge - 1].push((x, v));
    }
    for (i, tab) in tables.iter_mut().enumerate() {
        if tab.is_empty() {
            return Err(err(
                "problem.table_path",
                format!("edge {} has no samples", i + 1),
            ));
        }
        tab.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(tables)
}
