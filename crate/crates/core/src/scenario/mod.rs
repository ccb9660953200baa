//! Scenario configuration, orchestration of the library operations and the
//! machine-readable reports they produce.
//!
//! A scenario is one TOML document with an explicit `schema_version`.
//! Unknown keys are errors. Relative paths resolve against the directory of
//! the config file and must exist at parse time.

mod problem;
mod report;
mod run;
mod suites;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use problem::{
    AnchorValues, BoxSpec, ForcingSpec, ModeEntry, ProblemDocument, ProblemOverrides,
    TimeGridSpec, PROBLEM_SCHEMA_VERSION,
};
pub use report::{emit_csv_series, parse_csv_series, CheckRecord, RunReport, Series, SolveOutputs, REPORT_SCHEMA_VERSION};
pub use run::{run_constants, run_feasibility, run_solve, run_verify_lemmas};
pub use suites::{simpson_moment, Suite};

use crate::constants::{DataConstants, GaussianExpansion, GridSpec};
use crate::error::{Error, Result};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "Suite::all")]
    pub suites: Vec<Suite>,
    #[serde(default = "default_lemma33_n")]
    pub lemma33_max_n: usize,
    #[serde(default = "default_lemma33_entry")]
    pub lemma33_max_entry: u32,
    /// Randomized instances for the bilinear bound.
    #[serde(default = "default_instances")]
    pub lemma35_instances: usize,
    /// Randomized instances per torus product case.
    #[serde(default = "default_closure")]
    pub closure_instances: usize,
    /// Fault injection: replace the `(-1)!! = 1` convention.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub double_factorial_minus_one: Option<f64>,
}

fn default_lemma33_n() -> usize {
    2
}
fn default_lemma33_entry() -> u32 {
    4
}
fn default_instances() -> usize {
    50
}
fn default_closure() -> usize {
    20
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            suites: Suite::all(),
            lemma33_max_n: default_lemma33_n(),
            lemma33_max_entry: default_lemma33_entry(),
            lemma35_instances: default_instances(),
            closure_instances: default_closure(),
            double_factorial_minus_one: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub problem: PathBuf,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_box: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_grid: Option<TimeGridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_cap: Option<f64>,
    /// Embed the final fields in the report.
    #[serde(default = "yes")]
    pub write_fields: bool,
}

fn default_max_iter() -> usize {
    50
}
fn default_tol() -> f64 {
    1e-10
}
fn yes() -> bool {
    true
}

impl SolveConfig {
    pub fn for_problem(problem: PathBuf) -> Self {
        SolveConfig {
            problem,
            max_iter: default_max_iter(),
            tol: default_tol(),
            mode_box: None,
            time_grid: None,
            ball_radius: None,
            truncation_cap: None,
            write_fields: true,
        }
    }
}

/// Data constants given directly or derived from Gaussian expansions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionInputs {
    pub phi: Option<GaussianExpansion>,
    pub eta: Option<GaussianExpansion>,
    pub f: Option<GaussianExpansion>,
    pub g: Option<GaussianExpansion>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibilitySystem {
    Boussinesq,
    NavierStokesRn,
    Torus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeasibilityConfig {
    pub system: FeasibilitySystem,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default = "one")]
    pub nu: f64,
    #[serde(default = "one")]
    pub kappa: f64,
    /// `max |a_ij|`.
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub data: Option<DataConstants>,
    #[serde(default)]
    pub expansions: Option<ExpansionInputs>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    /// Trial point for the Navier-Stokes pair.
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub d: Option<f64>,
    /// Torus: a problem document, or the scalars below.
    #[serde(default)]
    pub problem: Option<PathBuf>,
    #[serde(default)]
    pub max_period: Option<f64>,
    #[serde(default)]
    pub data_size: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub n: usize,
    pub c: f64,
    pub d: f64,
    #[serde(default = "one")]
    pub nu: f64,
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub data: Option<DataConstants>,
    #[serde(default)]
    pub expansions: Option<ExpansionInputs>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub verify: Option<VerifyConfig>,
    #[serde(default)]
    pub solve: Option<SolveConfig>,
    #[serde(default)]
    pub feasibility: Option<FeasibilityConfig>,
    #[serde(default)]
    pub constants: Option<ConstantsConfig>,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
    /// Raw bytes hashed into the report digest.
    #[serde(skip)]
    pub source: String,
}

/// Command-line overrides applied after parsing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub mode_box: Option<u32>,
    pub time_grid: Option<TimeGridSpec>,
    pub out: Option<PathBuf>,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ScenarioConfig {
    pub fn empty() -> Self {
        ScenarioConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            seed: 0,
            out: None,
            verify: None,
            solve: None,
            feasibility: None,
            constants: None,
            base_dir: PathBuf::from("."),
            source: String::new(),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| cfg_err(format!("config: {e}")))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.source = text.to_string();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Range and path checks. Called after parsing and after overrides.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(cfg_err(format!(
                "schema_version {} is not supported (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if let Some(v) = &self.verify {
            if v.lemma33_max_n > 3 || v.lemma33_max_entry > 6 {
                return Err(cfg_err("lemma33 sweep limited to n <= 3 and entries <= 6"));
            }
            if v.lemma35_instances > 10_000 || v.closure_instances > 10_000 {
                return Err(cfg_err("instance counts limited to 10000"));
            }
            if let Some(x) = v.double_factorial_minus_one {
                if !x.is_finite() {
                    return Err(cfg_err("double_factorial_minus_one must be finite"));
                }
            }
        }
        if let Some(s) = &self.solve {
            if s.max_iter < 1 || s.max_iter > 100_000 {
                return Err(cfg_err(format!("max_iter must be in 1..=100000, got {}", s.max_iter)));
            }
            if !(s.tol > 0.0 && s.tol < 1.0) {
                return Err(cfg_err(format!("tol must be in (0, 1), got {}", s.tol)));
            }
            if let Some(k) = s.mode_box {
                if k == 0 || k > 64 {
                    return Err(cfg_err(format!("mode_box must be in 1..=64, got {k}")));
                }
            }
            if let Some(t) = &s.time_grid {
                t.validate()?;
            }
            self.require_file(&s.problem)?;
        }
        if let Some(f) = &self.feasibility {
            if !(f.nu > 0.0 && f.kappa > 0.0 && f.b >= 0.0) {
                return Err(cfg_err("feasibility needs nu > 0, kappa > 0, b >= 0"));
            }
            if let Some(p) = &f.problem {
                self.require_file(p)?;
            }
            if let Some(n) = f.n {
                if n == 0 || n > 64 {
                    return Err(cfg_err(format!("n must be in 1..=64, got {n}")));
                }
            }
            if let Some(g) = &f.grid {
                if !(g.lo > 0.0 && g.hi > g.lo && g.per_decade >= 1 && g.per_decade <= 1000) {
                    return Err(cfg_err("grid needs 0 < lo < hi and 1 <= per_decade <= 1000"));
                }
                if g.refine_steps > 200 {
                    return Err(cfg_err("refine_steps limited to 200"));
                }
            }
        }
        if let Some(c) = &self.constants {
            if !(c.nu > 0.0 && c.kappa > 0.0 && c.b >= 0.0) {
                return Err(cfg_err("constants need nu > 0, kappa > 0, b >= 0"));
            }
            if c.n == 0 || c.n > 64 {
                return Err(cfg_err(format!("n must be in 1..=64, got {}", c.n)));
            }
        }
        Ok(())
    }

    fn require_file(&self, p: &Path) -> Result<()> {
        let full = self.resolve(p);
        if full.is_file() {
            Ok(())
        } else {
            Err(cfg_err(format!("referenced file {} does not exist", full.display())))
        }
    }

    /// Apply command-line overrides; on error `self` is left unchanged.
    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        let mut next = self.clone();
        next.apply_unchecked(o);
        next.validate()?;
        *self = next;
        Ok(())
    }

    fn apply_unchecked(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
        if let Some(solve) = &mut self.solve {
            if let Some(m) = o.max_iter {
                solve.max_iter = m;
            }
            if let Some(t) = o.tol {
                solve.tol = t;
            }
            if let Some(k) = o.mode_box {
                solve.mode_box = Some(k);
            }
            if let Some(g) = o.time_grid {
                solve.time_grid = Some(g);
            }
        }
    }
}

/// Twelve data constants from whichever expansions are present.
pub fn data_from_expansions(e: &ExpansionInputs, n: usize) -> Result<DataConstants> {
    let pair = |x: &Option<GaussianExpansion>, j: u32| -> Result<(f64, f64)> {
        match x {
            None => Ok((0.0, 0.0)),
            Some(exp) if exp.n != n => Err(cfg_err(format!(
                "expansion dimension {} differs from n = {n}",
                exp.n
            ))),
            Some(exp) => crate::constants::data_constants(exp, j),
        }
    };
    let (c_phi0, d_phi0) = pair(&e.phi, 0)?;
    let (c_phi1, d_phi1) = pair(&e.phi, 1)?;
    let (c_eta0, d_eta0) = pair(&e.eta, 0)?;
    let (c_eta1, d_eta1) = pair(&e.eta, 1)?;
    let (c_f0, d_f0) = pair(&e.f, 0)?;
    let (c_g0, d_g0) = pair(&e.g, 0)?;
    Ok(DataConstants {
        c_phi0,
        c_phi1,
        c_eta0,
        c_eta1,
        c_f0,
        c_g0,
        d_phi0,
        d_phi1,
        d_eta0,
        d_eta1,
        d_f0,
        d_g0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_reject() {
        let c = ScenarioConfig::from_toml("schema_version = 1\n[verify]\nsuites = []\n", Path::new(".")).unwrap();
        assert_eq!(c.verify.unwrap().suites, vec![]);
        assert!(ScenarioConfig::from_toml("schema_version = 2\n", Path::new(".")).is_err());
        let typo = "schema_version = 1\n[verify]\nlemma33_max_m = 2\n";
        assert!(matches!(ScenarioConfig::from_toml(typo, Path::new(".")), Err(Error::Config(_))));
        let missing = "schema_version = 1\n[solve]\nproblem = \"no/such/file.json\"\n";
        assert!(ScenarioConfig::from_toml(missing, Path::new(".")).is_err());
    }

    #[test]
    fn overrides_are_validated() {
        let mut c = ScenarioConfig::empty();
        c.solve = Some(SolveConfig::for_problem(PathBuf::from("Cargo.toml")));
        assert!(c.apply(&Overrides { tol: Some(-1.0), ..Default::default() }).is_err());
        assert!(c.apply(&Overrides { max_iter: Some(3), ..Default::default() }).is_ok());
        assert_eq!(c.solve.unwrap().max_iter, 3);
    }
}
