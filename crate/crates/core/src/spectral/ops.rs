use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use num_complex::Complex64;

use super::field::promote_pair;
use super::{FourierField, Mode, ModeBox, VectorField};
use crate::classes::KParams;
use crate::error::{Error, Result};

/// Dense row-major index of `p + q` inside `out_box`, or `None` if it falls outside.
#[inline]
fn sum_index(p: &[i32], q: &[i32], radii: &[u32]) -> Option<u128> {
    let mut idx: u128 = 0;
    for ((a, b), r) in p.iter().zip(q).zip(radii) {
        let s = *a as i64 + *b as i64;
        let r = *r as i64;
        if s < -r || s > r {
            return None;
        }
        idx = idx * (2 * r as u128 + 1) + (s + r) as u128;
    }
    Some(idx)
}

fn unpack(mut idx: u128, radii: &[u32]) -> Mode {
    let mut v = vec![0i32; radii.len()];
    for (k, r) in radii.iter().enumerate().rev() {
        let w = 2 * *r as u128 + 1;
        v[k] = (idx % w) as i32 - *r as i32;
        idx /= w;
    }
    Mode::new(v)
}

/// Truncated Cauchy product.
///
/// For every output mode the contributions are summed in lexicographic order
/// of the first operand's mode, so results are reproducible bit for bit. Pairs
/// whose sum leaves `out_box` are dropped and their bound
/// `max_t |a(p)| * max_t |b(q)|` is added to the result's truncation loss.
pub fn convolve(a: &FourierField, b: &FourierField, out_box: &ModeBox) -> Result<FourierField> {
    a.geometry.check_same(&b.geometry)?;
    if out_box.dim() != a.geometry.dim() {
        return Err(Error::GeometryMismatch("output box dimension".into()));
    }
    let (a, b) = promote_pair(a, b)?;
    let ns = a.n_samples();
    let radii = out_box.radii();

    let b_terms: Vec<(&[i32], &[Complex64], f64)> = b
        .coeffs
        .iter()
        .map(|(m, v)| (m.entries(), v.as_slice(), max_norm(v)))
        .collect();

    let mut acc: HashMap<u128, Vec<Complex64>> = HashMap::new();
    let mut loss = 0.0;
    for (p, av) in &a.coeffs {
        let amax = max_norm(av);
        for (q, bv, bmax) in &b_terms {
            match sum_index(p.entries(), q, radii) {
                Some(idx) => {
                    let slot = acc
                        .entry(idx)
                        .or_insert_with(|| vec![Complex64::new(0.0, 0.0); ns]);
                    for ((s, x), y) in slot.iter_mut().zip(av).zip(*bv) {
                        *s += x * y;
                    }
                }
                None => loss += amax * bmax,
            }
        }
    }

    let coeffs: BTreeMap<Mode, Vec<Complex64>> = acc
        .into_iter()
        .filter(|(_, v)| v.iter().any(|c| c.re != 0.0 || c.im != 0.0))
        .map(|(idx, v)| (unpack(idx, radii), v))
        .collect();
    if loss > 0.0 {
        log::debug!("convolution dropped pairs with l1 bound {loss:e}");
    }
    Ok(FourierField {
        geometry: a.geometry.clone(),
        time: a.time.clone(),
        mode_box: out_box.clone(),
        coeffs,
        real: a.real && b.real,
        truncation_loss: loss,
    })
}

/// [`convolve`] with the default box: sum of the input boxes, clipped to `limit`.
pub fn convolve_auto(
    a: &FourierField,
    b: &FourierField,
    limit: Option<&ModeBox>,
) -> Result<FourierField> {
    let mut out = a.mode_box.sum(&b.mode_box);
    if let Some(l) = limit {
        out = out.clip(l);
    }
    convolve(a, b, &out)
}

fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Multiply every coefficient by `2 pi i theta_k / l_k` (zero-based axis).
pub fn partial_derivative(a: &FourierField, axis: usize) -> Result<FourierField> {
    let n = a.geometry.dim();
    if axis >= n {
        return Err(Error::AxisOutOfRange { axis, dim: n });
    }
    let mut out = a.map_modes(|m| Complex64::new(0.0, a.geometry.wavenumber(m, axis)));
    out.real = a.real;
    out.truncation_loss = a.truncation_loss;
    Ok(out)
}

pub fn gradient(a: &FourierField) -> Result<VectorField> {
    VectorField::new(
        (0..a.geometry.dim())
            .map(|k| partial_derivative(a, k))
            .collect::<Result<_>>()?,
    )
}

pub fn divergence(v: &VectorField) -> Result<FourierField> {
    let mut acc = partial_derivative(v.component(0), 0)?;
    for k in 1..v.dim() {
        acc = acc.add(&partial_derivative(v.component(k), k)?)?;
    }
    let real = v.components().iter().all(|c| c.real);
    let mut acc = acc.prune_zeros();
    acc.real = real;
    Ok(acc)
}

/// Multiply by the Laplacian symbol `-sum_j (2 pi theta_j / l_j)^2`.
pub fn laplacian(a: &FourierField) -> FourierField {
    let mut out = a.map_modes(|m| Complex64::new(-a.geometry.wavenumber_sq(m), 0.0));
    out.real = a.real;
    out
}

/// `sum_theta |a(theta)|` for a spatial field.
pub fn norm_ibar(a: &FourierField) -> Result<f64> {
    if !a.is_spatial() {
        return Err(Error::ExpectedSpatial);
    }
    Ok(a.coeffs.values().map(|v| v[0].norm()).sum())
}

/// Trapezoidal integral of `|a(m, .)|` over the field's grid.
pub fn mode_time_integral(a: &FourierField, m: &Mode) -> Result<f64> {
    let grid = a.time.as_ref().ok_or(Error::ExpectedTimeSampled)?;
    let w = grid.trapezoid_weights();
    Ok(a.coeffs
        .get(m)
        .map_or(0.0, |v| v.iter().zip(&w).map(|(c, w)| c.norm() * w).sum()))
}

/// `sum_m integral |a(m, t)| dt` on the grid, plus the class envelope beyond
/// the horizon when K parameters are given.
pub fn norm_i(a: &FourierField, tail: Option<&KParams>) -> Result<f64> {
    let grid = a.time.as_ref().ok_or(Error::ExpectedTimeSampled)?;
    let w = grid.trapezoid_weights();
    let body: f64 = a
        .coeffs
        .values()
        .map(|v| v.iter().zip(&w).map(|(c, w)| c.norm() * w).sum::<f64>())
        .sum();
    let extra = match tail {
        Some(k) => k.tail_integral(grid.horizon(), a.geometry.dim()),
        None => 0.0,
    };
    Ok(body + extra)
}

/// Largest [`norm_ibar`] over the components.
pub fn norm_ibar_vector(v: &VectorField) -> Result<f64> {
    v.components()
        .iter()
        .map(norm_ibar)
        .try_fold(0.0, |acc: f64, x| x.map(|x| acc.max(x)))
}

/// Largest [`norm_i`] over the components.
pub fn norm_i_vector(v: &VectorField, tail: Option<&KParams>) -> Result<f64> {
    v.components()
        .iter()
        .map(|c| norm_i(c, tail))
        .try_fold(0.0, |acc: f64, x| x.map(|x| acc.max(x)))
}

/// Point value `sum_theta a(theta) exp(sum_j 2 i pi theta_j x_j / l_j)`.
pub fn evaluate(a: &FourierField, x: &[f64], t_index: usize) -> Result<Complex64> {
    let n = a.geometry.dim();
    if x.len() != n {
        return Err(Error::GeometryMismatch(format!(
            "point has {} coordinates, expected {n}",
            x.len()
        )));
    }
    if a.time.is_some() && t_index >= a.n_samples() {
        return Err(Error::IndexOutOfRange {
            index: t_index,
            len: a.n_samples(),
        });
    }
    let l = a.geometry.periods();
    let mut sum = Complex64::new(0.0, 0.0);
    for (m, v) in &a.coeffs {
        let phase: f64 = m
            .entries()
            .iter()
            .zip(x)
            .zip(l)
            .map(|((&k, xj), lj)| 2.0 * PI * k as f64 * xj / lj)
            .sum();
        let c = if v.len() == 1 { v[0] } else { v[t_index] };
        sum += c * Complex64::from_polar(1.0, phase);
    }
    Ok(sum)
}
