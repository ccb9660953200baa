//! Closed-form special quantities: Gaussian moments, the factorial-ratio
//! inequality, sphere areas and the l1 bound on `u * d rho / d x_k`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{norm_i, norm_ibar, FourierField};

pub const TABLE_MAX: usize = 128;

/// Exact `k!` and `k!!` for `0 <= k <= 128`, with float mirrors.
#[derive(Clone, Debug)]
pub struct DoubleFactorialTable {
    factorial: Vec<BigUint>,
    double_factorial: Vec<BigUint>,
    factorial_f: Vec<f64>,
    double_factorial_f: Vec<f64>,
    minus_one: f64,
}

impl DoubleFactorialTable {
    pub fn new() -> Self {
        let mut factorial = vec![BigUint::one(); TABLE_MAX + 1];
        let mut double_factorial = vec![BigUint::one(); TABLE_MAX + 1];
        for k in 1..=TABLE_MAX {
            factorial[k] = &factorial[k - 1] * BigUint::from(k);
            double_factorial[k] = if k >= 2 {
                &double_factorial[k - 2] * BigUint::from(k)
            } else {
                BigUint::one()
            };
        }
        let to_f = |v: &Vec<BigUint>| v.iter().map(|x| x.to_f64().unwrap_or(f64::INFINITY)).collect();
        DoubleFactorialTable {
            factorial_f: to_f(&factorial),
            double_factorial_f: to_f(&double_factorial),
            factorial,
            double_factorial,
            minus_one: 1.0,
        }
    }

    /// Table whose `(-1)!!` is replaced by `value`. Only for fault injection.
    pub fn with_minus_one(mut self, value: f64) -> Self {
        self.minus_one = value;
        self
    }

    pub fn factorial(&self, k: usize) -> &BigUint {
        &self.factorial[k]
    }

    pub fn factorial_f64(&self, k: usize) -> f64 {
        self.factorial_f.get(k).copied().unwrap_or(f64::INFINITY)
    }

    pub fn double_factorial(&self, k: usize) -> &BigUint {
        &self.double_factorial[k]
    }

    /// `k!!` for `k >= -1`.
    pub fn double_factorial_f64(&self, k: i64) -> f64 {
        match k {
            -1 => self.minus_one,
            k if k < -1 => f64::NAN,
            k => self
                .double_factorial_f
                .get(k as usize)
                .copied()
                .unwrap_or(f64::INFINITY),
        }
    }
}

impl Default for DoubleFactorialTable {
    fn default() -> Self {
        Self::new()
    }
}

/// Shared table with the standard conventions.
pub fn table() -> &'static DoubleFactorialTable {
    static TABLE: OnceLock<DoubleFactorialTable> = OnceLock::new();
    TABLE.get_or_init(DoubleFactorialTable::new)
}

pub fn factorial_f64(k: usize) -> f64 {
    table().factorial_f64(k)
}

pub fn double_factorial_f64(k: i64) -> f64 {
    table().double_factorial_f64(k)
}

fn check_rate(b: f64) -> Result<()> {
    if b > 0.0 && b.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("Gaussian rate must be positive, got {b}")))
    }
}

/// `integral_0^inf r^{2k} e^{-b r^2} dr = (2k-1)!! sqrt(pi) / (2^{k+1} b^{k+1/2})`.
pub fn gaussian_moment_even(k: u32, b: f64) -> Result<f64> {
    moment_even(table(), k, b)
}

/// `integral_0^inf r^{2k+1} e^{-b r^2} dr = (2k)!! / (2^{k+1} b^{k+1})`.
pub fn gaussian_moment_odd(k: u32, b: f64) -> Result<f64> {
    moment_odd(table(), k, b)
}

fn moment_even(t: &DoubleFactorialTable, k: u32, b: f64) -> Result<f64> {
    check_rate(b)?;
    let k = k as i32;
    Ok(t.double_factorial_f64(2 * k as i64 - 1) * PI.sqrt()
        / (2f64.powi(k + 1) * b.powf(k as f64 + 0.5)))
}

fn moment_odd(t: &DoubleFactorialTable, k: u32, b: f64) -> Result<f64> {
    check_rate(b)?;
    let k = k as i32;
    Ok(t.double_factorial_f64(2 * k as i64) / (2f64.powi(k + 1) * b.powi(k + 1)))
}

/// `integral_0^inf x^j e^{-b x^2} dx` for any `j >= 0`.
pub fn gaussian_moment(j: u32, b: f64) -> Result<f64> {
    gaussian_moment_with(table(), j, b)
}

/// Same as [`gaussian_moment`] with an explicit double-factorial table.
pub fn gaussian_moment_with(t: &DoubleFactorialTable, j: u32, b: f64) -> Result<f64> {
    if j.is_multiple_of(2) {
        moment_even(t, j / 2, b)
    } else {
        moment_odd(t, j / 2, b)
    }
}

/// Exact orthant moment and the closed-form upper bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentBound {
    pub exact: f64,
    pub bound: f64,
}

/// `integral_{R_+^n} x^alpha e^{-b|x|^2} dx` as a product of one-dimensional
/// moments, together with `(alpha - 1)!! pi^{n/2} / (2b)^{(|alpha|+n)/2}`.
pub fn gaussian_moment_multi(alpha: &[i32], b: f64) -> Result<MomentBound> {
    gaussian_moment_multi_with(table(), alpha, b)
}

pub fn gaussian_moment_multi_with(
    table: &DoubleFactorialTable,
    alpha: &[i32],
    b: f64,
) -> Result<MomentBound> {
    check_rate(b)?;
    if let Some(a) = alpha.iter().find(|a| **a < 0) {
        return Err(Error::InvalidParameter(format!(
            "moment exponents must be nonnegative, got {a}"
        )));
    }
    let n = alpha.len() as f64;
    let total: i64 = alpha.iter().map(|&a| a as i64).sum();
    let mut exact = 1.0;
    let mut df = 1.0;
    for &a in alpha {
        exact *= gaussian_moment_with(table, a as u32, b)?;
        df *= table.double_factorial_f64(a as i64 - 1);
    }
    let bound = df * PI.powf(n / 2.0) / (2.0 * b).powf((total as f64 + n) / 2.0);
    Ok(MomentBound { exact, bound })
}

/// One evaluation of the factorial ratio.
#[derive(Clone, Debug, PartialEq)]
pub struct Lemma33Result {
    pub ratio: BigRational,
    pub holds: bool,
}

impl Lemma33Result {
    pub fn ratio_f64(&self) -> f64 {
        self.ratio.to_f64().unwrap_or(f64::NAN)
    }
}

fn multi_factorial(t: &DoubleFactorialTable, v: &[u32]) -> BigUint {
    v.iter()
        .fold(BigUint::one(), |acc, &x| acc * t.factorial(x as usize))
}

/// `L = b!(g+e_k)![2(b-a1)]![2(g+e_k-a2)]! / (2^{|b+g+e_k-a1-a2|} (b-a1)!(g+e_k-a2)!(2b)!(2g)!)`
/// in exact rationals; `holds` is `L <= 1`. The axis is zero-based.
pub fn lemma33_check(
    alpha1: &[u32],
    alpha2: &[u32],
    beta: &[u32],
    gamma: &[u32],
    axis: usize,
) -> Result<Lemma33Result> {
    let n = beta.len();
    if alpha1.len() != n || alpha2.len() != n || gamma.len() != n {
        return Err(Error::GeometryMismatch("multi-index lengths differ".into()));
    }
    if axis >= n {
        return Err(Error::AxisOutOfRange { axis, dim: n });
    }
    let mut ge = gamma.to_vec();
    ge[axis] += 1;
    if beta.iter().zip(alpha1).any(|(b, a)| a > b) || ge.iter().zip(alpha2).any(|(g, a)| a > g) {
        return Err(Error::Precondition(
            "need beta >= alpha1 and gamma + e_k >= alpha2".into(),
        ));
    }
    if beta.iter().chain(&ge).any(|&x| 2 * x as usize > TABLE_MAX) {
        return Err(Error::InvalidParameter("entries exceed factorial table".into()));
    }
    let t = table();
    let d1: Vec<u32> = beta.iter().zip(alpha1).map(|(b, a)| b - a).collect();
    let d2: Vec<u32> = ge.iter().zip(alpha2).map(|(g, a)| g - a).collect();
    let twice = |v: &[u32]| v.iter().map(|x| 2 * x).collect::<Vec<_>>();
    let num = multi_factorial(t, beta)
        * multi_factorial(t, &ge)
        * multi_factorial(t, &twice(&d1))
        * multi_factorial(t, &twice(&d2));
    let shift: u32 = d1.iter().chain(&d2).sum();
    let den = (BigUint::one() << shift as usize)
        * multi_factorial(t, &d1)
        * multi_factorial(t, &d2)
        * multi_factorial(t, &twice(beta))
        * multi_factorial(t, &twice(gamma));
    let ratio = BigRational::new(num.into(), den.into());
    let holds = ratio <= BigRational::one();
    Ok(Lemma33Result { ratio, holds })
}

/// One inadmissible tuple found by the sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma33Violation {
    pub alpha1: Vec<u32>,
    pub alpha2: Vec<u32>,
    pub beta: Vec<u32>,
    pub gamma: Vec<u32>,
    pub axis: usize,
    pub ratio: f64,
    pub ratio_exact: String,
}

/// Summary of an exhaustive enumeration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma33Sweep {
    pub admissible: u64,
    pub max_ratio: f64,
    pub max_ratio_exact: String,
    pub violations: Vec<Lemma33Violation>,
}

fn boxes(n: usize, max: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..=max).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

/// Every admissible `(alpha1, alpha2, beta, gamma, k)` with `1 <= n <= max_n`
/// and all entries in `0..=max_entry`.
pub fn lemma33_sweep(max_n: usize, max_entry: u32) -> Lemma33Sweep {
    let mut admissible = 0u64;
    let mut max_ratio = BigRational::zero();
    let mut violations = Vec::new();
    for n in 1..=max_n {
        let all = boxes(n, max_entry);
        for beta in &all {
            for gamma in &all {
                for axis in 0..n {
                    for alpha1 in all.iter().filter(|a| a.iter().zip(beta).all(|(a, b)| a <= b)) {
                        for alpha2 in all.iter().filter(|a| {
                            a.iter()
                                .zip(gamma)
                                .enumerate()
                                .all(|(j, (a, g))| *a <= g + (j == axis) as u32)
                        }) {
                            let r = lemma33_check(alpha1, alpha2, beta, gamma, axis)
                                .expect("admissible by construction");
                            admissible += 1;
                            if r.ratio > max_ratio {
                                max_ratio = r.ratio.clone();
                            }
                            if !r.holds {
                                violations.push(Lemma33Violation {
                                    alpha1: alpha1.clone(),
                                    alpha2: alpha2.clone(),
                                    beta: beta.clone(),
                                    gamma: gamma.clone(),
                                    axis,
                                    ratio: r.ratio_f64(),
                                    ratio_exact: r.ratio.to_string(),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Lemma33Sweep {
        admissible,
        max_ratio: max_ratio.to_f64().unwrap_or(f64::NAN),
        max_ratio_exact: max_ratio.to_string(),
        violations,
    }
}

/// `Gamma(n/2 + 1)` for integer `n >= 1`, exact on half-integers.
fn gamma_half_plus_one(n: u32) -> f64 {
    if n.is_multiple_of(2) {
        factorial_f64((n / 2) as usize)
    } else {
        // Gamma(m + 1/2) = (2m-1)!! sqrt(pi) / 2^m with m = (n+1)/2
        let m = n.div_ceil(2);
        double_factorial_f64(n as i64) * PI.sqrt() / 2f64.powi(m as i32)
    }
}

/// Area of the unit sphere in `R^n`: `pi^{n/2} n / Gamma(n/2 + 1)`.
pub fn sphere_area(n: u32) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParameter("sphere dimension must be >= 1".into()));
    }
    Ok(PI.powf(n as f64 / 2.0) * n as f64 / gamma_half_plus_one(n))
}

/// `l_k / (2 pi kappa) [Ibar(phi) + I(h)][Ibar(eta) + I(g)]`.
pub fn lemma35_bound(
    phi: &FourierField,
    eta: &FourierField,
    h: &FourierField,
    g: &FourierField,
    axis: usize,
    kappa: f64,
) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
    }
    let geom = phi.geometry();
    for f in [eta, h, g] {
        geom.check_same(f.geometry())?;
    }
    if axis >= geom.dim() {
        return Err(Error::AxisOutOfRange { axis, dim: geom.dim() });
    }
    let lk = geom.period(axis);
    Ok(lk / (2.0 * PI * kappa)
        * (norm_ibar(phi)? + norm_i(h, None)?)
        * (norm_ibar(eta)? + norm_i(g, None)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    #[test]
    fn conventions() {
        assert_eq!(double_factorial_f64(-1), 1.0);
        assert_eq!(double_factorial_f64(0), 1.0);
        assert_eq!(double_factorial_f64(7), 105.0);
        assert_eq!(double_factorial_f64(8), 384.0);
        assert_eq!(factorial_f64(0), 1.0);
        assert_eq!(factorial_f64(10), 3_628_800.0);
        assert!(factorial_f64(128).is_finite());
    }

    #[test]
    fn moment_examples() {
        let sp = PI.sqrt();
        assert!((gaussian_moment_even(0, 1.0).unwrap() - sp / 2.0).abs() < 1e-15);
        assert!((gaussian_moment_even(1, 1.0).unwrap() - sp / 4.0).abs() < 1e-15);
        let v = gaussian_moment_even(2, 2.0).unwrap();
        assert!((v - 3.0 * PI.sqrt() / 2f64.powf(5.5)).abs() < 1e-15);
        assert!((v - 0.117_498_200_373_328_14).abs() < 1e-15);
        assert_eq!(gaussian_moment_odd(0, 1.0).unwrap(), 0.5);
        assert_eq!(gaussian_moment_odd(1, 1.0).unwrap(), 0.5);
        assert_eq!(gaussian_moment_odd(0, 2.0).unwrap(), 0.25);
        assert!(gaussian_moment_even(0, 0.0).is_err());
        assert!(gaussian_moment_odd(0, -1.0).is_err());
    }

    #[test]
    fn multi_moment_examples() {
        let m = gaussian_moment_multi(&[0], 1.0).unwrap();
        assert!((m.exact - PI.sqrt() / 2.0).abs() < 1e-15);
        assert!((m.bound - (PI / 2.0).sqrt()).abs() < 1e-15);
        let m = gaussian_moment_multi(&[1, 1], 1.0).unwrap();
        assert!((m.exact - 0.25).abs() < 1e-16);
        assert!(m.bound >= m.exact);
        assert!(gaussian_moment_multi(&[-1], 1.0).is_err());
    }

    #[test]
    fn corrupted_convention_breaks_bound() {
        let t = DoubleFactorialTable::new().with_minus_one(2.0);
        let bad = gaussian_moment_with(&t, 0, 1.0).unwrap();
        assert!((bad - PI.sqrt()).abs() < 1e-15);
        let m = gaussian_moment_multi_with(&t, &[0, 2], 1.0).unwrap();
        assert!(m.exact > gaussian_moment_multi(&[0, 2], 1.0).unwrap().exact);
    }

    #[test]
    fn lemma33_examples() {
        let r = lemma33_check(&[0], &[0], &[1], &[0], 0).unwrap();
        assert_eq!(r.ratio, BigRational::new(BigInt::from(1), BigInt::from(2)));
        assert!(r.holds);
        // alpha1 = beta, alpha2 = gamma + e_k
        let r = lemma33_check(&[2, 1], &[1, 3], &[2, 1], &[0, 3], 0).unwrap();
        assert!(r.holds);
        assert!(lemma33_check(&[2], &[0], &[1], &[0], 0).is_err());
    }

    #[test]
    fn lemma33_counterexample() {
        let r = lemma33_check(&[0], &[0], &[0], &[2], 0).unwrap();
        assert_eq!(r.ratio, BigRational::new(BigInt::from(15), BigInt::from(4)));
        assert!(!r.holds);
    }

    #[test]
    fn sphere_examples() {
        assert!((sphere_area(1).unwrap() - 2.0).abs() < 1e-15);
        assert!((sphere_area(2).unwrap() - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3).unwrap() - 4.0 * PI).abs() < 1e-14);
        for n in 1..30 {
            let lhs = sphere_area(n + 2).unwrap();
            let rhs = 2.0 * PI * sphere_area(n).unwrap() / n as f64;
            assert!((lhs - rhs).abs() <= 1e-13 * rhs);
        }
        assert!(sphere_area(0).is_err());
    }
}
