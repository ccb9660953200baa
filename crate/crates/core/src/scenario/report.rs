use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::picard::{IterationRecord, Verdict};
use crate::serde_float::Num;
use crate::spectral::{FieldDocument, VectorFieldDocument};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One named check with its verdict, margin and supporting numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    #[serde(default, with = "crate::serde_float::option")]
    pub margin: Option<f64>,
    #[serde(default)]
    pub numbers: BTreeMap<String, Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, passed: bool) -> Self {
        CheckRecord {
            name: name.into(),
            passed,
            margin: None,
            numbers: BTreeMap::new(),
            detail: None,
        }
    }

    pub fn margin(mut self, m: f64) -> Self {
        self.margin = Some(m);
        self
    }

    pub fn num(mut self, key: &str, v: f64) -> Self {
        self.numbers.insert(key.to_string(), Num(v));
        self
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.numbers.get(key).map(|n| n.0)
    }
}

/// Final fields of a solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveOutputs {
    pub r: VectorFieldDocument,
    pub u: VectorFieldDocument,
    pub p: FieldDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<VectorFieldDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<VectorFieldDocument>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    /// SHA-256 of the config text and every document it references.
    pub input_digest: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckRecord>,
    #[serde(default)]
    pub series: Vec<IterationRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<SolveOutputs>,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn new(command: &str, seed: u64, inputs: &[&[u8]]) -> Self {
        let mut h = Sha256::new();
        for part in inputs {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part);
        }
        RunReport {
            schema_version: REPORT_SCHEMA_VERSION,
            command: command.to_string(),
            input_digest: hex::encode(h.finalize()),
            seed,
            passed: true,
            checks: Vec::new(),
            series: Vec::new(),
            verdict: None,
            outputs: None,
            warnings: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn push(&mut self, c: CheckRecord) {
        self.passed &= c.passed;
        self.checks.push(c);
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: RunReport = serde_json::from_str(s)?;
        if r.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "report schema_version {} is not supported",
                r.schema_version
            )));
        }
        Ok(r)
    }
}

/// Iteration series that can be exported.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Series {
    Residuals,
    UpdateNorms,
    ConditionMargins,
}

impl Series {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "residuals" | "residual" => Ok(Series::Residuals),
            "update_norms" | "updates" => Ok(Series::UpdateNorms),
            "condition_margins" | "margins" => Ok(Series::ConditionMargins),
            _ => Err(Error::Config(format!(
                "unknown series {s:?}; expected residuals, update_norms or condition_margins"
            ))),
        }
    }

    pub fn column(&self) -> &'static str {
        match self {
            Series::Residuals => "residual_norm",
            Series::UpdateNorms => "update_norm",
            Series::ConditionMargins => "condition_margin",
        }
    }

    /// One value per iteration record, in order.
    pub fn values(&self, report: &RunReport) -> Vec<f64> {
        report.series.iter().map(|r| self.value(r)).collect()
    }

    fn value(&self, r: &IterationRecord) -> f64 {
        match self {
            Series::Residuals => r.residual_norm,
            Series::UpdateNorms => r.update_norm,
            Series::ConditionMargins => r.condition_margin,
        }
    }
}

/// `iteration,<column>` with one row per record, 17 significant digits and
/// LF line endings.
pub fn emit_csv_series(report: &RunReport, series: Series) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["iteration", series.column()]).map_err(io)?;
    for r in &report.series {
        w.write_record([r.iteration.to_string(), format!("{:.16e}", series.value(r))])
            .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Inverse of [`emit_csv_series`].
pub fn parse_csv_series(text: &str) -> Result<(String, Vec<(usize, f64)>)> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if header.len() != 2 || &header[0] != "iteration" {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let i = rec[0].parse().map_err(|e| Error::Parse(format!("{e}")))?;
        let v = rec[1].parse().map_err(|e| Error::Parse(format!("{e}")))?;
        rows.push((i, v));
    }
    Ok((header[1].to_string(), rows))
}
