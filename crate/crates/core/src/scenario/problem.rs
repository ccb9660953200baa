//! Sparse JSON description of a periodic problem.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classes::KParams;
use crate::error::{Error, Result};
use crate::picard::{ProblemKind, TorusProblem};
use crate::propagators::PhysicsParams;
use crate::spectral::{FourierField, Mode, ModeBox, TimeGrid, TorusGeometry, VectorField};

pub const PROBLEM_SCHEMA_VERSION: u32 = 1;

/// One nonzero coefficient: mode and `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeEntry {
    pub mode: Vec<i32>,
    pub value: [f64; 2],
}

/// `f_k(m, t) = value e^{-decay t}` per component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingSpec {
    #[serde(default)]
    pub decay: f64,
    pub components: Vec<Vec<ModeEntry>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGridSpec {
    pub horizon: f64,
    pub steps: usize,
}

impl TimeGridSpec {
    /// Parse `"T_max,M"`.
    pub fn parse(s: &str) -> Result<Self> {
        let (t, m) = s
            .split_once(',')
            .ok_or_else(|| Error::Config(format!("time grid {s:?} is not \"T_max,M\"")))?;
        let horizon = t
            .trim()
            .parse::<f64>()
            .map_err(|e| Error::Config(format!("time grid horizon: {e}")))?;
        let steps = m
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::Config(format!("time grid steps: {e}")))?;
        let spec = TimeGridSpec { horizon, steps };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) || self.steps == 0 || self.steps > 100_000 {
            return Err(Error::Config(format!(
                "time grid needs 0 < T_max and 1 <= M <= 100000, got ({}, {})",
                self.horizon, self.steps
            )));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Arc<TimeGrid>> {
        self.validate()?;
        Ok(Arc::new(TimeGrid::uniform(self.horizon, self.steps)?))
    }
}

/// Uniform radius or one radius per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoxSpec {
    Uniform(u32),
    PerAxis(Vec<u32>),
}

impl BoxSpec {
    pub fn build(&self, n: usize) -> Result<ModeBox> {
        match self {
            BoxSpec::Uniform(k) => Ok(ModeBox::uniform(n, *k)),
            BoxSpec::PerAxis(v) if v.len() == n => Ok(ModeBox::new(v.clone())),
            BoxSpec::PerAxis(v) => Err(Error::Config(format!(
                "mode limit has {} radii for dimension {n}",
                v.len()
            ))),
        }
    }
}

/// Constant anchor value or one per sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnchorValues {
    Constant(f64),
    PerSample(Vec<f64>),
}

impl Default for AnchorValues {
    fn default() -> Self {
        AnchorValues::Constant(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: ProblemKind,
    pub periods: Vec<f64>,
    pub nu: f64,
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coupling: Vec<Vec<f64>>,
    pub time_grid: TimeGridSpec,
    pub mode_limit: BoxSpec,
    pub phi: Vec<Vec<ModeEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<ForcingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<Vec<ModeEntry>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<ForcingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Vec<f64>>,
    #[serde(default)]
    pub p0: AnchorValues,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<KParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_cap: Option<f64>,
}

fn one() -> f64 {
    1.0
}

/// Discretization overrides applied on top of a document.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProblemOverrides {
    pub mode_box: Option<u32>,
    pub time_grid: Option<TimeGridSpec>,
    pub ball_radius: Option<f64>,
    pub truncation_cap: Option<f64>,
}

fn mode_of(e: &ModeEntry, n: usize, limit: &ModeBox) -> Result<Mode> {
    if e.mode.len() != n {
        return Err(Error::Config(format!("mode {:?} has wrong dimension for n = {n}", e.mode)));
    }
    let m = Mode::new(e.mode.clone());
    if !limit.contains(&m) {
        return Err(Error::Config(format!("mode {:?} lies outside the mode limit", e.mode)));
    }
    Ok(m)
}

fn finish_real(mut f: FourierField) -> Result<FourierField> {
    if f.is_hermitian(1e-14) {
        f.set_real(true, 1e-14)?;
    }
    Ok(f)
}

fn spatial_vector(
    comps: &[Vec<ModeEntry>],
    geometry: &TorusGeometry,
    limit: &ModeBox,
    what: &str,
) -> Result<VectorField> {
    let n = geometry.dim();
    if comps.len() != n {
        return Err(Error::Config(format!("{what} has {} components, expected {n}", comps.len())));
    }
    let fields = comps
        .iter()
        .map(|entries| {
            let mut f = FourierField::spatial(geometry.clone(), limit.clone())?;
            for e in entries {
                let m = mode_of(e, n, limit)?;
                if f.get(&m).is_some() {
                    return Err(Error::Config(format!("{what}: duplicate mode {:?}", e.mode)));
                }
                f.set(m, Complex64::new(e.value[0], e.value[1]))?;
            }
            finish_real(f)
        })
        .collect::<Result<Vec<_>>>()?;
    VectorField::new(fields)
}

fn forcing_vector(
    spec: &ForcingSpec,
    geometry: &TorusGeometry,
    grid: &Arc<TimeGrid>,
    limit: &ModeBox,
    what: &str,
) -> Result<VectorField> {
    if !(spec.decay >= 0.0 && spec.decay.is_finite()) {
        return Err(Error::Config(format!("{what}: decay must be finite and >= 0")));
    }
    let spatial = spatial_vector(&spec.components, geometry, limit, what)?;
    let envelope: Vec<f64> = grid.samples().iter().map(|t| (-spec.decay * t).exp()).collect();
    let comps = spatial
        .components()
        .iter()
        .map(|c| {
            let mut f = FourierField::time_sampled(geometry.clone(), grid.clone(), limit.clone())?;
            for (m, v) in c.iter() {
                f.insert(m.clone(), envelope.iter().map(|e| v[0] * e).collect())?;
            }
            finish_real(f)
        })
        .collect::<Result<Vec<_>>>()?;
    VectorField::new(comps)
}

impl ProblemDocument {
    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ProblemDocument =
            serde_json::from_str(s).map_err(|e| Error::Config(format!("problem document: {e}")))?;
        if doc.schema_version != PROBLEM_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "problem schema_version {} is not supported (expected {PROBLEM_SCHEMA_VERSION})",
                doc.schema_version
            )));
        }
        Ok(doc)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn build(&self, overrides: &ProblemOverrides) -> Result<TorusProblem> {
        let geometry =
            TorusGeometry::new(self.periods.clone()).map_err(|e| Error::Config(e.to_string()))?;
        let n = geometry.dim();
        let limit = match overrides.mode_box {
            Some(k) => ModeBox::uniform(n, k),
            None => self.mode_limit.build(n)?,
        };
        let grid = overrides.time_grid.unwrap_or(self.time_grid).build()?;
        let physics = PhysicsParams::new(self.nu, self.kappa, self.coupling.clone())
            .map_err(|e| Error::Config(e.to_string()))?;
        let phi = spatial_vector(&self.phi, &geometry, &limit, "phi")?;
        let f = match &self.f {
            Some(spec) => forcing_vector(spec, &geometry, &grid, &limit, "f")?,
            None => crate::propagators::zero_vector(&geometry, Some(&grid), limit.clone())?,
        };
        let eta = self
            .eta
            .as_ref()
            .map(|e| spatial_vector(e, &geometry, &limit, "eta"))
            .transpose()?;
        let g = self
            .g
            .as_ref()
            .map(|s| forcing_vector(s, &geometry, &grid, &limit, "g"))
            .transpose()?;
        if self.kind == ProblemKind::NavierStokes && (eta.is_some() || g.is_some()) {
            return Err(Error::Config("density data given for a Navier-Stokes problem".into()));
        }
        let anchor = self.anchor.clone().unwrap_or_else(|| vec![0.0; n]);
        let p0 = match &self.p0 {
            AnchorValues::Constant(v) => vec![*v; grid.len()],
            AnchorValues::PerSample(v) => v.clone(),
        };
        let mut problem =
            TorusProblem::new(physics, self.kind, grid, limit, phi, f, eta, g, anchor, p0)?;
        problem.ball_radius = overrides.ball_radius.or(self.ball_radius);
        problem.tail = self.tail;
        problem.truncation_cap = overrides.truncation_cap.or(self.truncation_cap);
        if let Some(c) = problem.ball_radius {
            if !(c > 0.0) {
                return Err(Error::Config(format!("ball radius must be positive, got {c}")));
            }
        }
        Ok(problem)
    }
}
