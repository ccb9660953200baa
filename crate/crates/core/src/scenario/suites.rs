//! Invariant suites run by `verify-lemmas`.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::report::CheckRecord;
use super::VerifyConfig;
use crate::analysis::{
    gaussian_moment_multi_with, gaussian_moment_with, lemma33_sweep, lemma35_bound, sphere_area,
    DoubleFactorialTable,
};
use crate::classes::{
    check_membership_j, check_membership_k, derivative_class, product_class_torus, ClassParams,
    JParams, KParams, TorusCase, TorusRates,
};
use crate::error::Result;
use crate::propagators::heat_propagate;
use crate::sampling::{random_j_field, random_k_field, rng, SeededRng};
use crate::spectral::{
    convolve_auto, norm_i, partial_derivative, FourierField, ModeBox, TimeGrid, TorusGeometry,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    GaussianMoments,
    SphereArea,
    Lemma33,
    Lemma35,
    DerivativeClosure,
    TorusClosure,
}

impl Suite {
    pub fn all() -> Vec<Suite> {
        vec![
            Suite::GaussianMoments,
            Suite::SphereArea,
            Suite::Lemma33,
            Suite::Lemma35,
            Suite::DerivativeClosure,
            Suite::TorusClosure,
        ]
    }
}

/// `integral_0^inf x^j e^{-b x^2} dx` by Romberg integration of the
/// rescaled integrand on `[0, 12]`. Independent of the closed forms.
pub fn simpson_moment(j: u32, b: f64) -> f64 {
    let f = |y: f64| y.powi(j as i32) * (-y * y).exp();
    let (lo, hi) = (0.0, 12.0);
    let mut rows: Vec<Vec<f64>> = vec![vec![0.5 * (hi - lo) * (f(lo) + f(hi))]];
    for level in 1..22 {
        let n = 1usize << level;
        let h = (hi - lo) / n as f64;
        let mid: f64 = (0..n / 2).map(|i| f(lo + (2 * i + 1) as f64 * h)).sum();
        let mut row = vec![0.5 * rows[level - 1][0] + h * mid];
        for k in 1..=level {
            let p = 4f64.powi(k as i32);
            row.push((p * row[k - 1] - rows[level - 1][k - 1]) / (p - 1.0));
        }
        let done = level > 4 && (row[level] - rows[level - 1][level - 1]).abs() <= 1e-15 * row[level].abs();
        rows.push(row);
        if done {
            break;
        }
    }
    let last = rows.last().unwrap();
    last[last.len() - 1] * b.powf(-(j as f64 + 1.0) / 2.0)
}

fn moments(table: &DoubleFactorialTable) -> Result<Vec<CheckRecord>> {
    let mut worst = 0.0f64;
    let mut worst_at = (0, 0.0);
    for j in 0..=13u32 {
        for b in [0.5, 1.0, 2.0, 5.0] {
            let closed = gaussian_moment_with(table, j, b)?;
            let quad = simpson_moment(j, b);
            let rel = ((closed - quad) / quad).abs();
            if !(rel <= worst) {
                worst = rel;
                worst_at = (j, b);
            }
        }
    }
    let closed = CheckRecord::new("gaussian_moment_closed_forms", worst <= 1e-10)
        .margin(1e-10 / worst)
        .num("max_relative_error", worst)
        .num("worst_power", worst_at.0 as f64)
        .num("worst_rate", worst_at.1);

    // orthant bound (alpha - 1)!! pi^{n/2} / (2b)^{(|alpha|+n)/2} >= exact
    let mut min_ratio = f64::INFINITY;
    let mut count = 0u32;
    for n in 1..=3usize {
        let total = 5usize.pow(n as u32);
        for code in 0..total {
            let alpha: Vec<i32> = (0..n).map(|i| ((code / 5usize.pow(i as u32)) % 5) as i32).collect();
            for b in [0.5, 1.0, 2.0] {
                let m = gaussian_moment_multi_with(table, &alpha, b)?;
                count += 1;
                min_ratio = min_ratio.min(m.bound / m.exact);
            }
        }
    }
    let bound = CheckRecord::new("gaussian_moment_orthant_bound", min_ratio >= 1.0 - 1e-12)
        .margin(min_ratio)
        .num("cases", count as f64)
        .num("min_bound_over_exact", min_ratio);
    Ok(vec![closed, bound])
}

fn sphere() -> Result<Vec<CheckRecord>> {
    use std::f64::consts::PI;
    let mut worst = 0.0f64;
    for n in 1..=24u32 {
        let ours = sphere_area(n)?;
        let reference = 2.0 * PI.powf(n as f64 / 2.0) / statrs::function::gamma::gamma(n as f64 / 2.0);
        worst = worst.max(((ours - reference) / reference).abs());
    }
    Ok(vec![CheckRecord::new("sphere_area_vs_gamma", worst <= 1e-12)
        .margin(1e-12 / worst.max(f64::MIN_POSITIVE))
        .num("max_relative_error", worst)])
}

fn lemma33(cfg: &VerifyConfig) -> Vec<CheckRecord> {
    let s = lemma33_sweep(cfg.lemma33_max_n, cfg.lemma33_max_entry);
    let mut c = CheckRecord::new("lemma33_factorial_ratio", s.violations.is_empty())
        .margin(1.0 / s.max_ratio)
        .num("admissible", s.admissible as f64)
        .num("violations", s.violations.len() as f64)
        .num("max_ratio", s.max_ratio);
    if let Some(v) = s.violations.first() {
        c = c.detail(format!(
            "{} violations; first: beta={:?} gamma={:?} axis={} ratio={}; largest ratio {}",
            s.violations.len(),
            v.beta,
            v.gamma,
            v.axis,
            v.ratio_exact,
            s.max_ratio_exact
        ));
    }
    vec![c]
}

fn random_geometry(r: &mut SeededRng) -> Result<TorusGeometry> {
    let n = r.random_range(1..=3usize);
    TorusGeometry::new((0..n).map(|_| r.random_range(0.5..2.0)).collect())
}

fn j_params(r: &mut SeededRng) -> Result<JParams> {
    JParams::new(r.random_range(0.2..1.5), r.random_range(0.1..2.0))
}

fn k_params(r: &mut SeededRng) -> Result<KParams> {
    KParams::new(r.random_range(0.2..2.0), r.random_range(0.2..1.5), r.random_range(0.1..2.0))
}

/// `I(u d rho / dx_k)` against the bilinear bound on random instances.
pub fn lemma35_instances(seed: u64, count: usize) -> Result<CheckRecord> {
    let mut r = rng(seed ^ 0x35);
    let grid = Arc::new(TimeGrid::graded(4.0, 1500, 7.0)?);
    let mut violations = 0usize;
    let mut min_margin = f64::INFINITY;
    for _ in 0..count {
        let g = random_geometry(&mut r)?;
        let n = g.dim();
        let bx = ModeBox::uniform(n, 2);
        let modes = r.random_range(1..=5usize);
        let (jp, kp) = (j_params(&mut r)?, k_params(&mut r)?);
        let phi = random_j_field(&mut r, &g, &bx, &jp, modes, false)?;
        let eta = random_j_field(&mut r, &g, &bx, &jp, modes, false)?;
        let h = random_k_field(&mut r, &g, &grid, &bx, &kp, modes, false)?;
        let gf = random_k_field(&mut r, &g, &grid, &bx, &kp, modes, false)?;
        let nu = r.random_range(0.5..2.0);
        let kappa = r.random_range(0.5..2.0);
        let axis = r.random_range(0..n);
        let u = heat_propagate(&phi, Some(&h), nu, &grid)?;
        let rho = heat_propagate(&eta, Some(&gf), kappa, &grid)?;
        let prod = convolve_auto(&u, &partial_derivative(&rho, axis)?, None)?;
        let lhs = norm_i(&prod, None)?;
        let bound = lemma35_bound(&phi, &eta, &h, &gf, axis, kappa)?;
        if lhs > bound {
            violations += 1;
        }
        if lhs > 0.0 {
            min_margin = min_margin.min(bound / lhs);
        }
    }
    Ok(CheckRecord::new("lemma35_bilinear_bound", violations == 0)
        .margin(min_margin)
        .num("instances", count as f64)
        .num("violations", violations as f64))
}

/// Derivatives of random `J` members stay in the predicted class.
pub fn derivative_instances(seed: u64, count: usize) -> Result<CheckRecord> {
    let mut r = rng(seed ^ 0x34);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let g = random_geometry(&mut r)?;
        let jp = j_params(&mut r)?;
        let f = random_j_field(&mut r, &g, &ModeBox::uniform(g.dim(), 3), &jp, 6, false)?;
        let axis = r.random_range(0..g.dim());
        let ClassParams::J(dp) = derivative_class(&ClassParams::J(jp), axis, &g)? else {
            unreachable!()
        };
        let m = check_membership_j(&partial_derivative(&f, axis)?, &dp)?;
        worst = worst.max(m.margin);
    }
    Ok(CheckRecord::new("derivative_class_closure", worst <= 1.0 + 1e-9)
        .margin(1.0 / worst.max(f64::MIN_POSITIVE))
        .num("instances", count as f64)
        .num("max_membership_ratio", worst))
}

enum Factor {
    P(JParams, f64),
    Q(KParams, f64),
}

fn factor(
    r: &mut SeededRng,
    q: bool,
    g: &TorusGeometry,
    grid: &Arc<TimeGrid>,
) -> Result<(FourierField, Factor)> {
    let bx = ModeBox::uniform(g.dim(), 2);
    let modes = r.random_range(1..=4usize);
    let rate = r.random_range(0.3..2.0);
    if q {
        let kp = k_params(r)?;
        let data = random_k_field(r, g, grid, &bx, &kp, modes, false)?;
        let zero = FourierField::spatial(g.clone(), bx)?;
        Ok((heat_propagate(&zero, Some(&data), rate, grid)?, Factor::Q(kp, rate)))
    } else {
        let jp = j_params(r)?;
        let data = random_j_field(r, g, &bx, &jp, modes, false)?;
        Ok((heat_propagate(&data, None, rate, grid)?, Factor::P(jp, rate)))
    }
}

/// Products `x1 d x2 / dx_k` of heat flows and Duhamel integrals against the
/// predicted `K` parameters, all four cases.
pub fn torus_closure_instances(seed: u64, count: usize) -> Result<Vec<CheckRecord>> {
    let mut r = rng(seed ^ 0x3434);
    let grid = Arc::new(TimeGrid::uniform(3.0, 120)?);
    let mut out = Vec::new();
    for case in TorusCase::ALL {
        let mut worst = 0.0f64;
        let mut failures = 0usize;
        for _ in 0..count {
            let g = random_geometry(&mut r)?;
            let q1 = matches!(case, TorusCase::QdP | TorusCase::QdQ);
            let q2 = matches!(case, TorusCase::PdQ | TorusCase::QdQ);
            let (x1, f1) = factor(&mut r, q1, &g, &grid)?;
            let (x2, f2) = factor(&mut r, q2, &g, &grid)?;
            let axis = r.random_range(0..g.dim());
            let p1 = match f1 {
                Factor::P(j, _) => ClassParams::J(j),
                Factor::Q(k, _) => ClassParams::K(k),
            };
            let (p2, rates) = match f2 {
                Factor::P(j, rate) => (ClassParams::J(j), TorusRates { kappa2: Some(rate), nu2: None }),
                Factor::Q(k, rate) => (ClassParams::K(k), TorusRates { kappa2: None, nu2: Some(rate) }),
            };
            let predicted = product_class_torus(case, &p1, &p2, axis, &g, rates)?;
            let prod = convolve_auto(&x1, &partial_derivative(&x2, axis)?, None)?;
            let m = check_membership_k(&prod, &predicted, None)?;
            if !m.holds {
                failures += 1;
            }
            worst = worst.max(m.margin);
        }
        out.push(
            CheckRecord::new(format!("torus_product_closure_{}", case.name()), failures == 0)
                .margin(1.0 / worst.max(f64::MIN_POSITIVE))
                .num("instances", count as f64)
                .num("violations", failures as f64)
                .num("max_membership_ratio", worst),
        );
    }
    Ok(out)
}

pub(super) fn run_suite(suite: Suite, cfg: &VerifyConfig, seed: u64) -> Result<Vec<CheckRecord>> {
    match suite {
        Suite::GaussianMoments => {
            let table = match cfg.double_factorial_minus_one {
                Some(v) => DoubleFactorialTable::new().with_minus_one(v),
                None => DoubleFactorialTable::new(),
            };
            moments(&table)
        }
        Suite::SphereArea => sphere(),
        Suite::Lemma33 => Ok(lemma33(cfg)),
        Suite::Lemma35 => Ok(vec![lemma35_instances(seed, cfg.lemma35_instances)?]),
        Suite::DerivativeClosure => Ok(vec![derivative_instances(seed, cfg.closure_instances)?]),
        Suite::TorusClosure => torus_closure_instances(seed, cfg.closure_instances),
    }
}
