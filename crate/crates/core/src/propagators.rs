//! Periodic solution operators: forced heat flow, Poisson solve with a point
//! anchor, the pressure gradient, and reconstruction of velocity and density.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    divergence, evaluate, FourierField, Mode, TimeGrid, TorusGeometry,
    VectorField,
};

/// Below this `|lambda * dt|` the second integrator weight uses its series.
pub const SERIES_THRESHOLD: f64 = 1e-2;

/// Relative slack for the mean-mode solvability check.
pub const POISSON_MEAN_TOL: f64 = 1e-9;

/// Viscosity, diffusivity and the buoyancy coupling matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsParams {
    pub nu: f64,
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default)]
    pub a: Vec<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

impl PhysicsParams {
    pub fn new(nu: f64, kappa: f64, a: Vec<Vec<f64>>) -> Result<Self> {
        let p = PhysicsParams { nu, kappa, a };
        p.validate(None)?;
        Ok(p)
    }

    pub fn navier_stokes(nu: f64) -> Result<Self> {
        PhysicsParams::new(nu, 1.0, Vec::new())
    }

    pub fn validate(&self, n: Option<usize>) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidParameter(format!("nu must be positive, got {}", self.nu)));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        if let Some(n) = n {
            if !self.a.is_empty() && (self.a.len() != n || self.a.iter().any(|row| row.len() != n)) {
                return Err(Error::InvalidParameter(format!("coupling matrix must be {n}x{n}")));
            }
        }
        if self.a.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("coupling matrix must be finite".into()));
        }
        Ok(())
    }

    /// `B = max |a_ij|`.
    pub fn b(&self) -> f64 {
        self.a.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Integrator weights over one step of length `dt` at rate `lambda`:
/// `(e^{-z}, w_a - w_b, w_b)` with `z = lambda dt`.
fn step_weights(lambda: f64, dt: f64) -> (f64, f64, f64) {
    let z = lambda * dt;
    let decay = (-z).exp();
    let wa = if z == 0.0 { dt } else { dt * -(-z).exp_m1() / z };
    let wb = if z.abs() < SERIES_THRESHOLD {
        dt * (0.5
            + z * (-1.0 / 6.0
                + z * (1.0 / 24.0 + z * (-1.0 / 120.0 + z * (1.0 / 720.0 - z / 5040.0)))))
    } else {
        dt * (z + (-z).exp_m1()) / (z * z)
    };
    (decay, wa - wb, wb)
}

/// `u(m, t) = e^{-lambda t}[phi(m) + integral_0^t f(m, s) e^{lambda s} ds]`
/// with `lambda = mu sum_j (2 pi m_j / l_j)^2`. The integral is exact for
/// forcings linear between samples.
pub fn heat_propagate(
    initial: &FourierField,
    forcing: Option<&FourierField>,
    mu: f64,
    grid: &Arc<TimeGrid>,
) -> Result<FourierField> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("diffusion rate must be positive, got {mu}")));
    }
    if !initial.is_spatial() {
        return Err(Error::ExpectedSpatial);
    }
    let geom = initial.geometry().clone();
    let forcing = match forcing {
        Some(f) => {
            geom.check_same(f.geometry())?;
            Some(f.promote(grid)?)
        }
        None => None,
    };
    let mode_box = match &forcing {
        Some(f) => initial.mode_box().max(f.mode_box()),
        None => initial.mode_box().clone(),
    };
    let times = grid.samples();
    let ns = times.len();
    let mut modes: Vec<&Mode> = initial.modes().collect();
    if let Some(f) = &forcing {
        modes.extend(f.modes());
        modes.sort();
        modes.dedup();
    }

    let zero = Complex64::new(0.0, 0.0);
    let mut coeffs = BTreeMap::new();
    for m in modes {
        let lambda = mu * geom.wavenumber_sq(m);
        let mut traj = Vec::with_capacity(ns);
        let mut u = initial.get(m).map_or(zero, |v| v[0]);
        traj.push(u);
        let fm = forcing.as_ref().and_then(|f| f.get(m));
        for i in 0..ns - 1 {
            let (decay, w0, w1) = step_weights(lambda, times[i + 1] - times[i]);
            u *= decay;
            if let Some(fv) = fm {
                u += fv[i] * w0 + fv[i + 1] * w1;
            }
            traj.push(u);
        }
        if traj.iter().any(|c| *c != zero) {
            coeffs.insert(m.clone(), traj);
        }
    }
    let mut out = FourierField::time_sampled(geom, grid.clone(), mode_box)?;
    for (m, v) in coeffs {
        out.insert(m, v)?;
    }
    let real = initial.is_real() && forcing.as_ref().is_none_or(|f| f.is_real());
    out.real = real;
    Ok(out)
}

/// Pressure-like scalar pinned to prescribed values at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct AnchoredScalar {
    /// Includes the anchor shift in its zero mode.
    pub field: FourierField,
    pub anchor: Vec<f64>,
    pub values: Vec<f64>,
    pub shift: Vec<Complex64>,
}

impl AnchoredScalar {
    /// Largest `|p(x_0, t) - p_0(t)|` over the samples.
    pub fn anchor_error(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for (i, p0) in self.values.iter().enumerate() {
            let v = evaluate(&self.field, &self.anchor, i)?;
            worst = worst.max((v - Complex64::new(*p0, 0.0)).norm());
        }
        Ok(worst)
    }
}

/// Solve `Laplacian p = g` for `m != 0` and fix the mean so that
/// `p(x_0, t) = p_0(t)`. `p0` has one value per sample (one for spatial `g`).
pub fn poisson_solve(g: &FourierField, x0: &[f64], p0: &[f64]) -> Result<AnchoredScalar> {
    let geom = g.geometry();
    let n = geom.dim();
    if x0.len() != n {
        return Err(Error::GeometryMismatch(format!(
            "anchor has {} coordinates, expected {n}",
            x0.len()
        )));
    }
    let ns = g.n_samples();
    if p0.len() != ns {
        return Err(Error::TimeGridMismatch(format!(
            "anchor trajectory has {} values, field has {ns} samples",
            p0.len()
        )));
    }
    let zero_mode = Mode::zeros(n);
    for t in 0..ns {
        let mean = g.coeff(&zero_mode, t).norm();
        let scale = g.iter().map(|(_, v)| v[t].norm()).fold(0.0, f64::max);
        let tol = POISSON_MEAN_TOL * (1.0 + scale);
        if mean > tol {
            return Err(Error::PoissonMeanMode { sample: t, magnitude: mean, tolerance: tol });
        }
    }
    let mut field = g.zeros_like();
    let mut shift = p0.iter().map(|p| Complex64::new(*p, 0.0)).collect::<Vec<_>>();
    let l = geom.periods();
    for (m, v) in g.iter() {
        if m.is_zero() {
            continue;
        }
        let denom = -4.0 * PI * PI * m
            .entries()
            .iter()
            .zip(l)
            .map(|(&k, lj)| (k as f64 / lj).powi(2))
            .sum::<f64>();
        let phase: f64 = m
            .entries()
            .iter()
            .zip(x0)
            .zip(l)
            .map(|((&k, x), lj)| 2.0 * PI * k as f64 * x / lj)
            .sum();
        let e = Complex64::from_polar(1.0, phase);
        let traj: Vec<Complex64> = v.iter().map(|c| c / denom).collect();
        for (s, c) in shift.iter_mut().zip(&traj) {
            *s -= c * e;
        }
        field.insert(m.clone(), traj)?;
    }
    if shift.iter().any(|s| s.re != 0.0 || s.im != 0.0) {
        field.insert(zero_mode, shift.clone())?;
    }
    field.real = g.is_real();
    Ok(AnchoredScalar {
        field,
        anchor: x0.to_vec(),
        values: p0.to_vec(),
        shift,
    })
}

/// `sum_i sum_j a_ij d rho_j / dx_i`.
fn coupling_divergence(rho: &VectorField, a: &[Vec<f64>]) -> Result<FourierField> {
    divergence(&couple(rho, a)?)
}

/// `(A rho)_k = sum_j a_kj rho_j`.
pub fn couple(rho: &VectorField, a: &[Vec<f64>]) -> Result<VectorField> {
    let n = rho.dim();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidParameter(format!("coupling matrix must be {n}x{n}")));
    }
    let mut comps = Vec::with_capacity(n);
    for row in a {
        let mut acc = rho.component(0).zeros_like();
        for (j, &aij) in row.iter().enumerate() {
            if aij != 0.0 {
                acc = acc.axpy(aij, rho.component(j))?;
            }
        }
        comps.push(acc);
    }
    VectorField::new(comps)
}

/// Gradient of the pressure solving `Laplacian p = div r + div f (+ div A rho)`:
/// component `k` at `m != 0` is `-i m_k s(m) / (2 pi l_k sum_j m_j^2 / l_j^2)`.
pub fn pressure_gradient(
    r: &VectorField,
    f: &VectorField,
    rho: Option<(&VectorField, &[Vec<f64>])>,
) -> Result<VectorField> {
    let mut source = divergence(r)?.add(&divergence(f)?)?;
    if let Some((rho, a)) = rho {
        source = source.add(&coupling_divergence(rho, a)?)?;
    }
    pressure_gradient_of_source(&source)
}

/// Pressure gradient for a given Laplacian source.
pub fn pressure_gradient_of_source(source: &FourierField) -> Result<VectorField> {
    let geom = source.geometry().clone();
    let l = geom.periods().to_vec();
    let comps = (0..geom.dim())
        .map(|k| {
            let mut c = source
                .map_modes(|m| {
                    if m.is_zero() || m.entries()[k] == 0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    let q: f64 = m
                        .entries()
                        .iter()
                        .zip(&l)
                        .map(|(&e, lj)| (e as f64 / lj).powi(2))
                        .sum();
                    Complex64::new(0.0, -(m.entries()[k] as f64) / (2.0 * PI * l[k] * q))
                });
            c.real = source.is_real();
            c
        })
        .collect();
    VectorField::new(comps)
}

/// `rho_k = heat(eta_k, g_k + h_k, kappa)`.
pub fn reconstruct_density(
    eta: &VectorField,
    g: &VectorField,
    h: Option<&VectorField>,
    kappa: f64,
    grid: &Arc<TimeGrid>,
) -> Result<VectorField> {
    let forcing = match h {
        Some(h) => g.promote(grid)?.add(&h.promote(grid)?)?,
        None => g.promote(grid)?,
    };
    let comps = eta
        .components()
        .iter()
        .zip(forcing.components())
        .map(|(e, f)| heat_propagate(e, Some(f), kappa, grid))
        .collect::<Result<Vec<_>>>()?;
    VectorField::new(comps)
}

/// Velocity together with the pressure gradient used to build it.
#[derive(Clone, Debug, PartialEq)]
pub struct Velocity {
    pub u: VectorField,
    pub grad_p: VectorField,
    pub source: FourierField,
}

/// Tolerance for the divergence of initial data.
pub const DIV_TOL: f64 = 1e-10;

/// Largest coefficient magnitude of `div v`.
pub fn max_divergence(v: &VectorField) -> Result<f64> {
    Ok(divergence(v)?.max_abs())
}

/// `u_k = heat(phi_k, r_k + f_k + (A rho)_k - d p / dx_k, nu)`.
pub fn reconstruct_velocity(
    phi: &VectorField,
    r: &VectorField,
    f: &VectorField,
    rho: Option<(&VectorField, &[Vec<f64>])>,
    nu: f64,
    grid: &Arc<TimeGrid>,
) -> Result<Velocity> {
    let div_phi = max_divergence(phi)?;
    if div_phi > DIV_TOL {
        log::warn!("initial velocity has divergence {div_phi:e}");
    }
    let r = r.promote(grid)?;
    let f = f.promote(grid)?;
    let mut forcing = r.add(&f)?;
    let mut source = divergence(&r)?.add(&divergence(&f)?)?;
    if let Some((rho, a)) = rho {
        let arho = couple(&rho.promote(grid)?, a)?;
        source = source.add(&divergence(&arho)?)?;
        forcing = forcing.add(&arho)?;
    }
    let grad_p = pressure_gradient_of_source(&source)?;
    let forcing = forcing.sub(&grad_p)?;
    let comps = phi
        .components()
        .iter()
        .zip(forcing.components())
        .map(|(p, q)| heat_propagate(p, Some(q), nu, grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(Velocity { u: VectorField::new(comps)?, grad_p, source })
}

/// Zero vector field on `geometry` with the given grid and box radius.
pub fn zero_vector(
    geometry: &TorusGeometry,
    grid: Option<&Arc<TimeGrid>>,
    mode_box: crate::spectral::ModeBox,
) -> Result<VectorField> {
    let template = match grid {
        Some(g) => FourierField::time_sampled(geometry.clone(), g.clone(), mode_box)?,
        None => FourierField::spatial(geometry.clone(), mode_box)?,
    };
    Ok(VectorField::zeros(&template))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{laplacian, ModeBox};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn pure_decay() {
        let grid = Arc::new(TimeGrid::uniform(0.5, 10).unwrap());
        let phi = FourierField::spatial(TorusGeometry::unit(1), ModeBox::uniform(1, 1))
            .unwrap()
            .with(vec![1], c(1.0))
            .unwrap();
        let u = heat_propagate(&phi, None, 1.0, &grid).unwrap();
        for (i, t) in grid.samples().iter().enumerate() {
            let e = (-4.0 * PI * PI * t).exp();
            assert!((u.coeff(&Mode::new(vec![1]), i).re - e).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_forcing_and_zero_mode() {
        let grid = Arc::new(TimeGrid::uniform(1.0, 7).unwrap());
        let g = TorusGeometry::unit(1);
        let phi = FourierField::spatial(g.clone(), ModeBox::uniform(1, 2)).unwrap();
        let f = FourierField::time_sampled(g, grid.clone(), ModeBox::uniform(1, 2))
            .unwrap()
            .with(vec![2], c(3.0))
            .unwrap()
            .with(vec![0], c(1.0))
            .unwrap();
        let u = heat_propagate(&phi, Some(&f), 0.01, &grid).unwrap();
        let lam = 0.01 * 16.0 * PI * PI;
        for (i, t) in grid.samples().iter().enumerate() {
            let want = 3.0 * (1.0 - (-lam * t).exp()) / lam;
            assert!((u.coeff(&Mode::new(vec![2]), i).re - want).abs() < 1e-13);
            assert!((u.coeff(&Mode::new(vec![0]), i).re - t).abs() < 1e-15);
        }
    }

    #[test]
    fn weights_continuous_across_series_switch() {
        for dt in [0.5, 1.0] {
            let below = step_weights((SERIES_THRESHOLD * 0.999999) / dt, dt);
            let above = step_weights((SERIES_THRESHOLD * 1.000001) / dt, dt);
            assert!((below.2 - above.2).abs() < 1e-8 * dt);
        }
    }

    #[test]
    fn poisson_example() {
        let g = FourierField::spatial(TorusGeometry::unit(2), ModeBox::uniform(2, 1))
            .unwrap()
            .with(vec![1, 0], c(1.0))
            .unwrap();
        let p = poisson_solve(&g, &[0.0, 0.0], &[0.0]).unwrap();
        let k = 1.0 / (4.0 * PI * PI);
        assert!((p.field.coeff(&Mode::new(vec![1, 0]), 0).re + k).abs() < 1e-16);
        assert!((p.shift[0].re - k).abs() < 1e-16);
        assert!(p.anchor_error().unwrap() < 1e-15);
        assert!((laplacian(&p.field).coeff(&Mode::new(vec![1, 0]), 0) - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn poisson_rejects_mean() {
        let g = FourierField::spatial(TorusGeometry::unit(1), ModeBox::uniform(1, 1))
            .unwrap()
            .with(vec![0], c(1e-3))
            .unwrap();
        assert!(matches!(
            poisson_solve(&g, &[0.0], &[0.0]),
            Err(Error::PoissonMeanMode { .. })
        ));
    }

    #[test]
    fn pressure_gradient_example() {
        let g = TorusGeometry::unit(2);
        let bx = ModeBox::uniform(2, 1);
        let z = FourierField::spatial(g.clone(), bx.clone()).unwrap();
        let r1 = z.clone().with(vec![1, 0], c(1.0)).unwrap();
        let r = VectorField::new(vec![r1, z.clone()]).unwrap();
        let f = VectorField::new(vec![z.clone(), z]).unwrap();
        let gp = pressure_gradient(&r, &f, None).unwrap();
        let v = gp.component(0).coeff(&Mode::new(vec![1, 0]), 0);
        assert!((v - c(1.0)).norm() < 1e-15);
        assert!(gp.component(1).is_empty());
        let zero = pressure_gradient(&f, &f, None).unwrap();
        assert!(zero.components().iter().all(|c| c.is_empty()));
    }
}
