//! Seeded generators of in-class random fields for property checks.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classes::{JParams, KParams};
use crate::error::Result;
use crate::spectral::{FourierField, Mode, ModeBox, TimeGrid, TorusGeometry, VectorField};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_mode<R: Rng>(rng: &mut R, mode_box: &ModeBox) -> Mode {
    Mode::new(
        mode_box
            .radii()
            .iter()
            .map(|&r| rng.random_range(-(r as i32)..=r as i32))
            .collect(),
    )
}

/// Up to `count` distinct modes. With `symmetric`, modes come in `+-` pairs.
pub fn random_support<R: Rng>(
    rng: &mut R,
    mode_box: &ModeBox,
    count: usize,
    symmetric: bool,
) -> Vec<Mode> {
    let mut out: Vec<Mode> = Vec::new();
    let cap = mode_box.capacity().min(count as u128 * 4) as usize;
    let mut tries = 0;
    while out.len() < count && tries < 50 * cap.max(1) {
        tries += 1;
        let m = random_mode(rng, mode_box);
        if out.contains(&m) {
            continue;
        }
        if symmetric {
            let neg = m.neg();
            if neg != m {
                if out.len() + 2 > count {
                    continue;
                }
                out.push(neg);
            }
        }
        out.push(m);
    }
    out
}

fn phase<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))
}

/// Spatial field inside `J(r, d)`: each coefficient is a random fraction of
/// its bound. Real fields get conjugate pairs.
pub fn random_j_field<R: Rng>(
    rng: &mut R,
    geometry: &TorusGeometry,
    mode_box: &ModeBox,
    params: &JParams,
    count: usize,
    real: bool,
) -> Result<FourierField> {
    let mut f = FourierField::spatial(geometry.clone(), mode_box.clone())?;
    for m in random_support(rng, mode_box, count, real) {
        if real && f.get(&m).is_some() {
            continue;
        }
        let amp = rng.random_range(0.0..1.0) * params.bound(&m);
        let mut c = phase(rng) * amp;
        if real && m.is_zero() {
            c = Complex64::new(c.norm(), 0.0);
        }
        f.set(m.clone(), c)?;
        if real && !m.is_zero() {
            f.set(m.neg(), c.conj())?;
        }
    }
    if real {
        f.set_real(true, 1e-12)?;
    }
    Ok(f)
}

/// Time-sampled field inside `K(b, r, d)`: `a(t) = c e^{-(b + delta) t}`
/// with `|c|` below the spatial bound and `delta >= 0`.
pub fn random_k_field<R: Rng>(
    rng: &mut R,
    geometry: &TorusGeometry,
    grid: &Arc<TimeGrid>,
    mode_box: &ModeBox,
    params: &KParams,
    count: usize,
    real: bool,
) -> Result<FourierField> {
    let mut f = FourierField::time_sampled(geometry.clone(), grid.clone(), mode_box.clone())?;
    for m in random_support(rng, mode_box, count, real) {
        if real && f.get(&m).is_some() {
            continue;
        }
        let amp = rng.random_range(0.0..1.0) * params.bound(&m, 0.0);
        let delta = rng.random_range(0.0..1.0) * params.b;
        let mut c = phase(rng) * amp;
        if real && m.is_zero() {
            c = Complex64::new(c.norm(), 0.0);
        }
        let traj: Vec<Complex64> = grid
            .samples()
            .iter()
            .map(|t| c * (-(params.b + delta) * t).exp())
            .collect();
        if real && !m.is_zero() {
            f.insert(m.neg(), traj.iter().map(|z| z.conj()).collect())?;
        }
        f.insert(m, traj)?;
    }
    if real {
        f.set_real(true, 1e-12)?;
    }
    Ok(f)
}

/// Remove the gradient part of `v` mode by mode: `v - k (k . v) / |k|^2`
/// with `k_j = m_j / l_j`. The zero mode is kept.
pub fn leray_project(v: &VectorField) -> Result<VectorField> {
    let geom = v.geometry().clone();
    let n = geom.dim();
    let l = geom.periods().to_vec();
    let mut modes: Vec<Mode> = v
        .components()
        .iter()
        .flat_map(|c| c.modes().cloned().collect::<Vec<_>>())
        .collect();
    modes.sort();
    modes.dedup();
    let mut comps: Vec<FourierField> = v.components().iter().map(|c| c.zeros_like()).collect();
    let ns = v.component(0).n_samples();
    for m in &modes {
        let k: Vec<f64> = m.entries().iter().zip(&l).map(|(&e, lj)| e as f64 / lj).collect();
        let k2: f64 = k.iter().map(|x| x * x).sum();
        for t in 0..ns {
            let dot: Complex64 = (0..n).map(|j| v.component(j).coeff(m, t) * k[j]).sum();
            for (j, comp) in comps.iter_mut().enumerate() {
                let mut val = v.component(j).coeff(m, t);
                if k2 > 0.0 {
                    val -= dot * (k[j] / k2);
                }
                let mut traj = comp.get(m).map(|s| s.to_vec()).unwrap_or_else(|| {
                    vec![Complex64::new(0.0, 0.0); ns]
                });
                traj[t] = val;
                comp.insert(m.clone(), traj)?;
            }
        }
    }
    let comps = comps
        .into_iter()
        .zip(v.components())
        .map(|(c, orig)| {
            let mut c = c.prune_zeros();
            c.real = orig.is_real();
            c
        })
        .collect();
    VectorField::new(comps)
}

/// Real divergence-free spatial vector field with roughly `count` modes per
/// component, scaled so that its largest component l1 norm equals `ibar`.
pub fn random_divergence_free<R: Rng>(
    rng: &mut R,
    geometry: &TorusGeometry,
    mode_box: &ModeBox,
    count: usize,
    ibar: f64,
) -> Result<VectorField> {
    let p = JParams::new(1.0, 1.0)?;
    let comps = (0..geometry.dim())
        .map(|_| random_j_field(rng, geometry, mode_box, &p, count, true))
        .collect::<Result<Vec<_>>>()?;
    let v = leray_project(&VectorField::new(comps)?)?;
    let norm = crate::spectral::norm_ibar_vector(&v)?;
    Ok(if norm > 0.0 { v.scale(ibar / norm) } else { v })
}
