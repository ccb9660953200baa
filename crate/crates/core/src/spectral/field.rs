use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use super::{Mode, ModeBox, TimeGrid, TorusGeometry};
use crate::error::{Error, Result};

/// Sparse truncated Fourier series, optionally sampled in time.
///
/// Spatial-only fields carry one coefficient per mode; time-sampled fields
/// carry one per sample of their [`TimeGrid`]. Every stored mode lies inside
/// `mode_box`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierField {
    pub(crate) geometry: TorusGeometry,
    pub(crate) time: Option<Arc<TimeGrid>>,
    pub(crate) mode_box: ModeBox,
    pub(crate) coeffs: BTreeMap<Mode, Vec<Complex64>>,
    pub(crate) real: bool,
    pub(crate) truncation_loss: f64,
}

impl FourierField {
    pub fn spatial(geometry: TorusGeometry, mode_box: ModeBox) -> Result<Self> {
        if mode_box.dim() != geometry.dim() {
            return Err(Error::GeometryMismatch(format!(
                "mode box has {} axes, geometry has {}",
                mode_box.dim(),
                geometry.dim()
            )));
        }
        Ok(FourierField {
            geometry,
            time: None,
            mode_box,
            coeffs: BTreeMap::new(),
            real: false,
            truncation_loss: 0.0,
        })
    }

    pub fn time_sampled(
        geometry: TorusGeometry,
        grid: Arc<TimeGrid>,
        mode_box: ModeBox,
    ) -> Result<Self> {
        let mut f = FourierField::spatial(geometry, mode_box)?;
        f.time = Some(grid);
        Ok(f)
    }

    /// Empty field with the same geometry, grid and box as `self`.
    pub fn zeros_like(&self) -> Self {
        FourierField {
            geometry: self.geometry.clone(),
            time: self.time.clone(),
            mode_box: self.mode_box.clone(),
            coeffs: BTreeMap::new(),
            real: self.real,
            truncation_loss: 0.0,
        }
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.geometry
    }

    pub fn time_grid(&self) -> Option<&Arc<TimeGrid>> {
        self.time.as_ref()
    }

    pub fn mode_box(&self) -> &ModeBox {
        &self.mode_box
    }

    pub fn is_spatial(&self) -> bool {
        self.time.is_none()
    }

    /// Values per stored trajectory (1 for spatial fields).
    pub fn n_samples(&self) -> usize {
        self.time.as_ref().map_or(1, |g| g.len())
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Declare (or clear) Hermitian symmetry. Declaring it is checked.
    pub fn set_real(&mut self, real: bool, tol: f64) -> Result<()> {
        if real && !self.is_hermitian(tol) {
            return Err(Error::Precondition(
                "coefficients are not Hermitian-symmetric".into(),
            ));
        }
        self.real = real;
        Ok(())
    }

    /// `a(-m) = conj(a(m))` for every stored mode, within `tol` (absolute).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let zero = vec![Complex64::new(0.0, 0.0); self.n_samples()];
        self.coeffs.iter().all(|(m, v)| {
            let w = self.coeffs.get(&m.neg()).unwrap_or(&zero);
            v.iter()
                .zip(w)
                .all(|(a, b)| (a - b.conj()).norm() <= tol * (1.0 + a.norm()))
        })
    }

    /// Certified bound on the l1 mass dropped by the operation that built this field.
    pub fn truncation_loss(&self) -> f64 {
        self.truncation_loss
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn modes(&self) -> impl Iterator<Item = &Mode> {
        self.coeffs.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Mode, &[Complex64])> {
        self.coeffs.iter().map(|(m, v)| (m, v.as_slice()))
    }

    pub fn get(&self, m: &Mode) -> Option<&[Complex64]> {
        self.coeffs.get(m).map(|v| v.as_slice())
    }

    /// Coefficient at mode `m` and sample `t` (0 when the mode is not stored).
    pub fn coeff(&self, m: &Mode, t: usize) -> Complex64 {
        self.coeffs
            .get(m)
            .map_or(Complex64::new(0.0, 0.0), |v| if v.len() == 1 { v[0] } else { v[t] })
    }

    /// Store a full trajectory (length 1 for spatial fields).
    pub fn insert(&mut self, m: Mode, values: Vec<Complex64>) -> Result<()> {
        if m.dim() != self.geometry.dim() {
            return Err(Error::GeometryMismatch(format!(
                "mode {:?} has wrong dimension",
                m.entries()
            )));
        }
        if !self.mode_box.contains(&m) {
            return Err(Error::InvalidParameter(format!(
                "mode {:?} outside mode box {:?}",
                m.entries(),
                self.mode_box.radii()
            )));
        }
        if values.len() != self.n_samples() {
            return Err(Error::TimeGridMismatch(format!(
                "trajectory has {} values, field expects {}",
                values.len(),
                self.n_samples()
            )));
        }
        self.coeffs.insert(m, values);
        Ok(())
    }

    /// Store a single value (spatial) or a constant trajectory (time-sampled).
    pub fn set(&mut self, m: Mode, value: Complex64) -> Result<()> {
        let v = vec![value; self.n_samples()];
        self.insert(m, v)
    }

    /// Builder form of [`FourierField::set`].
    pub fn with(mut self, m: impl Into<Mode>, value: Complex64) -> Result<Self> {
        self.set(m.into(), value)?;
        Ok(self)
    }

    /// Spatial field viewed as a constant-in-time trajectory on `grid`.
    pub fn promote(&self, grid: &Arc<TimeGrid>) -> Result<FourierField> {
        match &self.time {
            Some(g) => {
                check_grid(g, grid)?;
                Ok(self.clone())
            }
            None => {
                let len = grid.len();
                let coeffs = self
                    .coeffs
                    .iter()
                    .map(|(m, v)| (m.clone(), vec![v[0]; len]))
                    .collect();
                Ok(FourierField {
                    geometry: self.geometry.clone(),
                    time: Some(grid.clone()),
                    mode_box: self.mode_box.clone(),
                    coeffs,
                    real: self.real,
                    truncation_loss: self.truncation_loss,
                })
            }
        }
    }

    /// Snapshot of a time-sampled field at one sample, as a spatial field.
    pub fn at_sample(&self, t: usize) -> Result<FourierField> {
        let n = self.n_samples();
        if self.time.is_some() && t >= n {
            return Err(Error::IndexOutOfRange { index: t, len: n });
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|(m, v)| (m.clone(), vec![if v.len() == 1 { v[0] } else { v[t] }]))
            .collect();
        Ok(FourierField {
            geometry: self.geometry.clone(),
            time: None,
            mode_box: self.mode_box.clone(),
            coeffs,
            real: self.real,
            truncation_loss: self.truncation_loss,
        })
    }

    /// Replace the mode box; fails if a stored mode falls outside it.
    pub fn with_mode_box(mut self, mode_box: ModeBox) -> Result<Self> {
        if mode_box.dim() != self.geometry.dim() {
            return Err(Error::GeometryMismatch("mode box dimension".into()));
        }
        if let Some(m) = self.coeffs.keys().find(|m| !mode_box.contains(m)) {
            return Err(Error::InvalidParameter(format!(
                "mode {:?} outside new box",
                m.entries()
            )));
        }
        self.mode_box = mode_box;
        Ok(self)
    }

    /// Apply a per-mode multiplier.
    pub fn map_modes(&self, f: impl Fn(&Mode) -> Complex64) -> FourierField {
        let mut out = self.zeros_like();
        for (m, v) in &self.coeffs {
            let s = f(m);
            if s == Complex64::new(0.0, 0.0) {
                continue;
            }
            out.coeffs
                .insert(m.clone(), v.iter().map(|c| c * s).collect());
        }
        out
    }

    pub fn scale(&self, s: f64) -> FourierField {
        let mut out = self.map_modes(|_| Complex64::new(s, 0.0));
        out.real = self.real;
        out
    }

    pub fn scale_complex(&self, s: Complex64) -> FourierField {
        let mut out = self.map_modes(|_| s);
        out.real = self.real && s.im == 0.0;
        out
    }

    pub fn neg(&self) -> FourierField {
        self.scale(-1.0)
    }

    /// `self + s * other`, promoting a spatial operand if the other is time-sampled.
    pub fn axpy(&self, s: f64, other: &FourierField) -> Result<FourierField> {
        self.geometry.check_same(&other.geometry)?;
        let (a, b) = promote_pair(self, other)?;
        let mut out = a.zeros_like();
        out.mode_box = a.mode_box.max(&b.mode_box);
        out.real = a.real && b.real;
        out.coeffs = a.coeffs.clone();
        for (m, v) in &b.coeffs {
            match out.coeffs.get_mut(m) {
                Some(acc) => {
                    for (x, y) in acc.iter_mut().zip(v) {
                        *x += y * s;
                    }
                }
                None => {
                    out.coeffs
                        .insert(m.clone(), v.iter().map(|y| y * s).collect());
                }
            }
        }
        out.truncation_loss = a.truncation_loss + s.abs() * b.truncation_loss;
        Ok(out)
    }

    pub fn add(&self, other: &FourierField) -> Result<FourierField> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &FourierField) -> Result<FourierField> {
        self.axpy(-1.0, other)
    }

    /// Drop trajectories that are identically zero.
    pub fn prune_zeros(mut self) -> Self {
        self.coeffs
            .retain(|_, v| v.iter().any(|c| c.re != 0.0 || c.im != 0.0));
        self
    }

    /// Largest coefficient magnitude over all modes and samples.
    pub fn max_abs(&self) -> f64 {
        self.coeffs
            .values()
            .flat_map(|v| v.iter().map(|c| c.norm()))
            .fold(0.0, f64::max)
    }

    pub(crate) fn set_truncation_loss(&mut self, loss: f64) {
        self.truncation_loss = loss;
    }
}

pub(crate) fn check_grid(a: &Arc<TimeGrid>, b: &Arc<TimeGrid>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::TimeGridMismatch(format!(
            "{} samples vs {} samples",
            a.len(),
            b.len()
        )))
    }
}

/// Bring two fields onto a common time representation.
pub(crate) fn promote_pair(
    a: &FourierField,
    b: &FourierField,
) -> Result<(FourierField, FourierField)> {
    match (&a.time, &b.time) {
        (None, None) => Ok((a.clone(), b.clone())),
        (Some(g), None) => Ok((a.clone(), b.promote(g)?)),
        (None, Some(g)) => Ok((a.promote(g)?, b.clone())),
        (Some(g), Some(h)) => {
            check_grid(g, h)?;
            Ok((a.clone(), b.clone()))
        }
    }
}

/// `n` scalar fields sharing one geometry, time grid and mode box.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    components: Vec<FourierField>,
}

impl VectorField {
    pub fn new(components: Vec<FourierField>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidParameter("vector field needs components".into()))?;
        if components.len() != first.geometry.dim() {
            return Err(Error::GeometryMismatch(format!(
                "{} components for dimension {}",
                components.len(),
                first.geometry.dim()
            )));
        }
        for c in &components[1..] {
            first.geometry.check_same(&c.geometry)?;
            match (&first.time, &c.time) {
                (None, None) => {}
                (Some(g), Some(h)) => check_grid(g, h)?,
                _ => {
                    return Err(Error::TimeGridMismatch(
                        "components mix spatial and time-sampled fields".into(),
                    ))
                }
            }
        }
        Ok(VectorField { components })
    }

    /// All-zero vector field with components like `template`.
    pub fn zeros(template: &FourierField) -> Self {
        let n = template.geometry.dim();
        VectorField {
            components: (0..n).map(|_| template.zeros_like()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, k: usize) -> &FourierField {
        &self.components[k]
    }

    pub fn components(&self) -> &[FourierField] {
        &self.components
    }

    pub fn into_components(self) -> Vec<FourierField> {
        self.components
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.components[0].geometry
    }

    pub fn time_grid(&self) -> Option<&Arc<TimeGrid>> {
        self.components[0].time.as_ref()
    }

    pub fn is_spatial(&self) -> bool {
        self.components[0].is_spatial()
    }

    pub fn map(&self, f: impl Fn(&FourierField) -> FourierField) -> VectorField {
        VectorField {
            components: self.components.iter().map(f).collect(),
        }
    }

    pub fn try_zip(
        &self,
        other: &VectorField,
        f: impl Fn(&FourierField, &FourierField) -> Result<FourierField>,
    ) -> Result<VectorField> {
        if self.dim() != other.dim() {
            return Err(Error::GeometryMismatch("vector dimensions differ".into()));
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| f(a, b))
            .collect::<Result<Vec<_>>>()?;
        VectorField::new(components)
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        self.try_zip(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField> {
        self.try_zip(other, |a, b| a.sub(b))
    }

    pub fn scale(&self, s: f64) -> VectorField {
        self.map(|c| c.scale(s))
    }

    pub fn promote(&self, grid: &Arc<TimeGrid>) -> Result<VectorField> {
        VectorField::new(
            self.components
                .iter()
                .map(|c| c.promote(grid))
                .collect::<Result<_>>()?,
        )
    }

    /// Largest coefficient magnitude over all components.
    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.max_abs())
            .fold(0.0, f64::max)
    }

    pub fn truncation_loss(&self) -> f64 {
        self.components.iter().map(|c| c.truncation_loss).sum()
    }
}
