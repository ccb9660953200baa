use std::collections::BTreeSet;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{FourierField, Mode, ModeBox, TimeGrid, TorusGeometry, VectorField};
use crate::error::{Error, Result};

/// One stored mode and its `[re, im]` trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldRecord {
    pub mode: Vec<i32>,
    pub values: Vec<[f64; 2]>,
}

/// Text form of a [`FourierField`]. Round-trips exactly through JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldDocument {
    pub periods: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_grid: Option<Vec<f64>>,
    pub mode_box: Vec<u32>,
    #[serde(default)]
    pub real: bool,
    #[serde(default)]
    pub truncation_loss: f64,
    pub records: Vec<FieldRecord>,
}

impl From<&FourierField> for FieldDocument {
    fn from(f: &FourierField) -> Self {
        FieldDocument {
            periods: f.geometry.periods().to_vec(),
            time_grid: f.time.as_ref().map(|g| g.samples().to_vec()),
            mode_box: f.mode_box.radii().to_vec(),
            real: f.real,
            truncation_loss: f.truncation_loss,
            records: f
                .coeffs
                .iter()
                .map(|(m, v)| FieldRecord {
                    mode: m.entries().to_vec(),
                    values: v.iter().map(|c| [c.re, c.im]).collect(),
                })
                .collect(),
        }
    }
}

impl FieldDocument {
    /// Rebuild the field. A grid passed in is reused when equal to the stored one.
    pub fn to_field(&self, shared_grid: Option<&Arc<TimeGrid>>) -> Result<FourierField> {
        let geometry = TorusGeometry::new(self.periods.clone())?;
        let mode_box = ModeBox::new(self.mode_box.clone());
        let mut f = match &self.time_grid {
            None => FourierField::spatial(geometry, mode_box)?,
            Some(s) => {
                let grid = match shared_grid {
                    Some(g) if g.samples() == s.as_slice() => g.clone(),
                    _ => Arc::new(TimeGrid::new(s.clone())?),
                };
                FourierField::time_sampled(geometry, grid, mode_box)?
            }
        };
        let mut seen = BTreeSet::new();
        for r in &self.records {
            let m = Mode::new(r.mode.clone());
            if !seen.insert(m.clone()) {
                return Err(Error::Parse(format!("duplicate mode {:?}", r.mode)));
            }
            f.insert(
                m,
                r.values.iter().map(|[re, im]| Complex64::new(*re, *im)).collect(),
            )?;
        }
        if self.real {
            f.set_real(true, 1e-9)?;
        }
        f.set_truncation_loss(self.truncation_loss);
        Ok(f)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Text form of a [`VectorField`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorFieldDocument {
    pub components: Vec<FieldDocument>,
}

impl From<&VectorField> for VectorFieldDocument {
    fn from(v: &VectorField) -> Self {
        VectorFieldDocument {
            components: v.components().iter().map(FieldDocument::from).collect(),
        }
    }
}

impl VectorFieldDocument {
    pub fn to_field(&self, shared_grid: Option<&Arc<TimeGrid>>) -> Result<VectorField> {
        let mut grid = shared_grid.cloned();
        let mut comps = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let f = c.to_field(grid.as_ref())?;
            if grid.is_none() {
                grid = f.time_grid().cloned();
            }
            comps.push(f);
        }
        VectorField::new(comps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_round_trip() {
        let grid = Arc::new(TimeGrid::new(vec![0.0, 0.1, 0.30000000000000004, 1.0 / 3.0]).unwrap());
        let mut f = FourierField::time_sampled(
            TorusGeometry::new(vec![1.0, std::f64::consts::PI]).unwrap(),
            grid.clone(),
            ModeBox::uniform(2, 3),
        )
        .unwrap();
        f.insert(
            Mode::new(vec![1, -2]),
            vec![
                Complex64::new(0.1, -1e-300),
                Complex64::new(1.0 / 7.0, 2.0f64.sqrt()),
                Complex64::new(-0.0, 5e-324),
                Complex64::new(f64::MAX, f64::MIN_POSITIVE),
            ],
        )
        .unwrap();
        let doc = FieldDocument::from(&f);
        let text = doc.to_json().unwrap();
        let back = FieldDocument::from_json(&text).unwrap().to_field(None).unwrap();
        assert_eq!(back, f);
        for (a, b) in back.iter().zip(f.iter()) {
            for (x, y) in a.1.iter().zip(b.1) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
    }

    #[test]
    fn rejects_unknown_keys() {
        let s = r#"{"periods":[1.0],"mode_box":[1],"records":[],"extra":1}"#;
        assert!(FieldDocument::from_json(s).is_err());
    }
}
