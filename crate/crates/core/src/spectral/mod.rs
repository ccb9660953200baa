//! Truncated multi-dimensional Fourier series on a periodic box.
//!
//! A field is stored as a sparse map from integer multi-index to a dense
//! coefficient trajectory: one complex number per time sample, or a single
//! value for spatial-only fields. The basis function for mode `m` is
//! `exp(sum_j 2 i pi m_j x_j / l_j)`.
//!
//! Axes are zero-based throughout the crate.

mod field;
mod ops;
mod serial;

pub use field::{FourierField, VectorField};
pub use ops::{
    convolve, convolve_auto, divergence, evaluate, gradient, laplacian, mode_time_integral,
    norm_i, norm_i_vector, norm_ibar, norm_ibar_vector, partial_derivative,
};
pub use serial::{FieldDocument, FieldRecord, VectorFieldDocument};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer multi-index labelling one Fourier mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mode(Vec<i32>);

impl Mode {
    pub fn new(entries: Vec<i32>) -> Self {
        Mode(entries)
    }

    pub fn zeros(n: usize) -> Self {
        Mode(vec![0; n])
    }

    /// Unit vector along `axis`, scaled by `k`.
    pub fn axis(n: usize, axis: usize, k: i32) -> Self {
        let mut v = vec![0; n];
        v[axis] = k;
        Mode(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[i32] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// `|m| = sum_k |m_k|`.
    pub fn l1(&self) -> u64 {
        self.0.iter().map(|&e| e.unsigned_abs() as u64).sum()
    }

    pub fn add(&self, other: &Mode) -> Mode {
        Mode(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Mode) -> Mode {
        Mode(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> Mode {
        Mode(self.0.iter().map(|a| -a).collect())
    }

    /// `prod_k |m_k|!` as a float.
    pub fn abs_factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&e| crate::analysis::factorial_f64(e.unsigned_abs() as usize))
            .product()
    }
}

impl From<Vec<i32>> for Mode {
    fn from(v: Vec<i32>) -> Self {
        Mode(v)
    }
}

/// Per-axis truncation radius: a mode is inside the box when `|m_k| <= radius_k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeBox(Vec<u32>);

impl ModeBox {
    pub fn new(radii: Vec<u32>) -> Self {
        ModeBox(radii)
    }

    pub fn uniform(n: usize, radius: u32) -> Self {
        ModeBox(vec![radius; n])
    }

    pub fn radii(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, m: &Mode) -> bool {
        m.0.len() == self.0.len()
            && m.0.iter().zip(&self.0).all(|(e, r)| e.unsigned_abs() <= *r)
    }

    /// Componentwise sum, the smallest box holding every pairwise mode sum.
    pub fn sum(&self, other: &ModeBox) -> ModeBox {
        ModeBox(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn max(&self, other: &ModeBox) -> ModeBox {
        ModeBox(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| *a.max(b))
                .collect(),
        )
    }

    pub fn clip(&self, limit: &ModeBox) -> ModeBox {
        ModeBox(
            self.0
                .iter()
                .zip(&limit.0)
                .map(|(a, b)| *a.min(b))
                .collect(),
        )
    }

    /// Number of modes the box can hold.
    pub fn capacity(&self) -> u128 {
        self.0.iter().map(|r| 2 * *r as u128 + 1).product()
    }

    /// Every mode inside the box, in lexicographic order.
    pub fn modes(&self) -> Vec<Mode> {
        let mut out = vec![Mode::zeros(0)];
        for &r in &self.0 {
            let r = r as i32;
            let mut next = Vec::with_capacity(out.len() * (2 * r as usize + 1));
            for prefix in &out {
                for k in -r..=r {
                    let mut v = prefix.0.clone();
                    v.push(k);
                    next.push(Mode(v));
                }
            }
            out = next;
        }
        out
    }
}

/// Periodic box `prod_j [0, l_j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusGeometry {
    periods: Vec<f64>,
}

impl TorusGeometry {
    pub fn new(periods: Vec<f64>) -> Result<Self> {
        if periods.is_empty() {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if let Some(l) = periods.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "periods must be positive, got {l}"
            )));
        }
        Ok(TorusGeometry { periods })
    }

    /// Unit box `[0, 1]^n`.
    pub fn unit(n: usize) -> Self {
        TorusGeometry {
            periods: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.periods.len()
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn period(&self, axis: usize) -> f64 {
        self.periods[axis]
    }

    pub fn max_period(&self) -> f64 {
        self.periods.iter().cloned().fold(f64::MIN, f64::max)
    }

    /// `2 pi m_axis / l_axis`.
    pub fn wavenumber(&self, m: &Mode, axis: usize) -> f64 {
        2.0 * PI * m.0[axis] as f64 / self.periods[axis]
    }

    /// `sum_j (2 pi m_j / l_j)^2`, the negated Laplacian symbol.
    pub fn wavenumber_sq(&self, m: &Mode) -> f64 {
        m.0.iter()
            .zip(&self.periods)
            .map(|(&k, l)| {
                let w = 2.0 * PI * k as f64 / l;
                w * w
            })
            .sum()
    }

    pub(crate) fn check_same(&self, other: &TorusGeometry) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GeometryMismatch(format!(
                "{:?} vs {:?}",
                self.periods, other.periods
            )))
        }
    }
}

/// Strictly increasing sample times starting at zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    samples: Vec<f64>,
}

impl TimeGrid {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.first() != Some(&0.0) {
            return Err(Error::InvalidParameter(
                "time grid must start exactly at 0".into(),
            ));
        }
        if samples.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter("time grid must be finite".into()));
        }
        if samples.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "time grid must be strictly increasing".into(),
            ));
        }
        Ok(TimeGrid { samples })
    }

    /// `steps + 1` equally spaced samples on `[0, horizon]`.
    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || steps == 0 {
            return Err(Error::InvalidParameter(format!(
                "uniform grid needs horizon > 0 and steps >= 1, got ({horizon}, {steps})"
            )));
        }
        let dt = horizon / steps as f64;
        let mut samples: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
        samples[steps] = horizon;
        TimeGrid::new(samples)
    }

    /// `0` followed by `steps + 1` log-spaced samples from
    /// `horizon * 10^-decades` to `horizon`. Resolves fast-decaying modes.
    pub fn graded(horizon: f64, steps: usize, decades: f64) -> Result<Self> {
        if !(horizon > 0.0) || steps == 0 || !(decades > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "graded grid needs horizon > 0, steps >= 1 and decades > 0, got ({horizon}, {steps}, {decades})"
            )));
        }
        let mut samples = vec![0.0];
        samples.extend(
            (0..=steps).map(|i| horizon * 10f64.powf(decades * (i as f64 / steps as f64 - 1.0))),
        );
        samples[steps + 1] = horizon;
        TimeGrid::new(samples)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.samples.last().unwrap()
    }

    /// Trapezoidal weights: `integral f ~ sum_i w_i f(t_i)`.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let s = &self.samples;
        let mut w = vec![0.0; s.len()];
        for i in 0..s.len().saturating_sub(1) {
            let h = 0.5 * (s[i + 1] - s[i]);
            w[i] += h;
            w[i + 1] += h;
        }
        w
    }
}
