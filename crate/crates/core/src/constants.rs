//! Whole-space existence constants: data constants of Gaussian expansions,
//! the `M`/`N` bounds for the Boussinesq system, the two-inequality test for
//! Navier-Stokes, and a deterministic search for a feasible `(C, D)`.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::analysis::{gaussian_moment, sphere_area};
use crate::error::{Error, Result};

/// `f(w) = e^{-b|w|^2} sum_beta a_beta w^beta` with finitely many terms;
/// `terms` holds `(beta, |a_beta|)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianExpansion {
    pub b: f64,
    pub n: usize,
    pub terms: Vec<(Vec<u32>, f64)>,
}

impl GaussianExpansion {
    pub fn new(b: f64, n: usize, terms: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        let e = GaussianExpansion { b, n, terms };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::InvalidParameter(format!("rate must be positive, got {}", self.b)));
        }
        for (beta, a) in &self.terms {
            if beta.len() != self.n {
                return Err(Error::GeometryMismatch(format!(
                    "exponent {beta:?} has wrong dimension for n = {}",
                    self.n
                )));
            }
            if !(*a >= 0.0 && a.is_finite()) {
                return Err(Error::InvalidParameter(format!("coefficient bound {a} must be >= 0")));
            }
        }
        Ok(())
    }

    /// Every term obeys `|a_beta| <= d r^|beta| / (2 beta)!`.
    pub fn is_consistent_with(&self, r: f64, d: f64) -> bool {
        self.terms.iter().all(|(beta, a)| {
            let k: u32 = beta.iter().sum();
            let f: f64 = beta
                .iter()
                .map(|&x| crate::analysis::factorial_f64(2 * x as usize))
                .product();
            *a <= d * r.powi(k as i32) / f * (1.0 + 1e-12)
        })
    }
}

/// `x^x` with `0^0 = 1`.
fn pow_self(x: f64, y: f64) -> f64 {
    if y == 0.0 {
        1.0
    } else {
        x.powf(y)
    }
}

/// `max_w |w|^j |w^beta| e^{-b|w|^2}`.
fn sup_term(beta: &[u32], j: u32, b: f64) -> f64 {
    let k: u32 = beta.iter().sum();
    let angular: f64 = if k == 0 {
        1.0
    } else {
        beta.iter()
            .map(|&bk| pow_self(bk as f64 / k as f64, bk as f64 / 2.0))
            .product()
    };
    let m = (k + j) as f64;
    let radial = if m == 0.0 { 1.0 } else { (m / (2.0 * b * E)).powf(m / 2.0) };
    angular * radial
}

/// `integral_{R^n} |w^beta| e^{-b|w|^2} dw`.
fn full_moment(beta: &[u32], b: f64) -> Result<f64> {
    let mut p = 1.0;
    for &x in beta {
        p *= 2.0 * gaussian_moment(x, b)?;
    }
    Ok(p)
}

/// Upper bounds `(C, D)` for `integral |w|^j |f(w)| dw` and `sup |w|^j |f(w)|`.
/// For `j = 1` the integral uses `|w| <= sum_k |w_k|`.
pub fn data_constants(expansion: &GaussianExpansion, j: u32) -> Result<(f64, f64)> {
    expansion.validate()?;
    if j > 1 {
        return Err(Error::InvalidParameter(format!("j must be 0 or 1, got {j}")));
    }
    let b = expansion.b;
    let mut c = 0.0;
    let mut d = 0.0;
    for (beta, a) in &expansion.terms {
        if *a == 0.0 {
            continue;
        }
        d += a * sup_term(beta, j, b);
        if j == 0 {
            c += a * full_moment(beta, b)?;
        } else {
            for k in 0..beta.len() {
                let mut shifted = beta.clone();
                shifted[k] += 1;
                c += a * full_moment(&shifted, b)?;
            }
        }
    }
    Ok((c, d))
}

/// The twelve data constants `C_{x,j}` (integrals) and `D_{x,j}` (sups).
/// Omitted fields deserialize as zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConstants {
    pub c_phi0: f64,
    pub c_phi1: f64,
    pub c_eta0: f64,
    pub c_eta1: f64,
    pub c_f0: f64,
    pub c_g0: f64,
    pub d_phi0: f64,
    pub d_phi1: f64,
    pub d_eta0: f64,
    pub d_eta1: f64,
    pub d_f0: f64,
    pub d_g0: f64,
}

impl DataConstants {
    pub fn uniform(v: f64) -> Self {
        DataConstants {
            c_phi0: v,
            c_phi1: v,
            c_eta0: v,
            c_eta1: v,
            c_f0: v,
            c_g0: v,
            d_phi0: v,
            d_phi1: v,
            d_eta0: v,
            d_eta1: v,
            d_f0: v,
            d_g0: v,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.c_phi0, self.c_phi1, self.c_eta0, self.c_eta1, self.c_f0, self.c_g0,
            self.d_phi0, self.d_phi1, self.d_eta0, self.d_eta1, self.d_f0, self.d_g0,
        ];
        if all.iter().all(|x| *x >= 0.0 && x.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParameter("data constants must be finite and nonnegative".into()))
        }
    }
}

/// Scalars entering the whole-space bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WholeSpacePhysics {
    pub nu: f64,
    pub kappa: f64,
    /// `max |a_ij|`.
    pub b: f64,
}

impl WholeSpacePhysics {
    fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.kappa > 0.0 && self.b >= 0.0) {
            return Err(Error::InvalidParameter(
                "need nu > 0, kappa > 0 and B >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem41Constants {
    pub m0: f64,
    pub m1: f64,
    pub m_prime: f64,
    pub m: f64,
    pub n1: f64,
    pub n2: f64,
    pub n: f64,
}

pub const BOUSSINESQ_MIN_DIM: usize = 9;
pub const NS_MIN_DIM: usize = 5;

fn check_cd(c: f64, d: f64) -> Result<()> {
    if c > 0.0 && d > 0.0 && c.is_finite() && d.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("need C, D > 0, got ({c}, {d})")))
    }
}

/// `M_0, M_1, M', M, N_1, N_2, N` at `(C, D)`.
///
/// `N_1` and `N_2` follow the bracket structure of the proof's estimates of
/// `|u_j d rho_k / dx_j|` and `|u_j d u_k / dx_j|`.
pub fn theorem41_constants(
    c: f64,
    d: f64,
    k: &DataConstants,
    phys: &WholeSpacePhysics,
    n: usize,
) -> Result<Theorem41Constants> {
    if n < BOUSSINESQ_MIN_DIM {
        return Err(Error::DimensionGate {
            case: "Boussinesq existence constants".into(),
            required: BOUSSINESQ_MIN_DIM,
            got: n,
        });
    }
    check_cd(c, d)?;
    k.validate()?;
    phys.validate()?;
    Ok(evaluate_constants(c, d, k, phys, n))
}

fn evaluate_constants(
    c: f64,
    d: f64,
    k: &DataConstants,
    phys: &WholeSpacePhysics,
    n: usize,
) -> Theorem41Constants {
    let nf = n as f64;
    let sn = sphere_area(n as u32).expect("n >= 1");
    let (nu, ka, b) = (phys.nu, phys.kappa, phys.b);

    // D + D_{f,0} + nB D_{eta,0} and its C counterpart
    let xd = d + k.d_f0 + nf * b * k.d_eta0;
    let xc = c + k.c_f0 + nf * b * k.c_eta0;
    let dg = d + k.d_g0;
    let cg = c + k.c_g0;
    // [(D + D_{g,0}) S_n / (n - m) + C_{g,0} + C]
    let y = |m: f64| dg * sn / (nf - m) + cg;
    // [(D + D_{f,0} + nB D_{eta,0}) S_n / (n - m) + C + C_{f,0} + nB C_{eta,0}]
    let z = |m: f64| xd * sn / (nf - m) + xc;

    let m_j = |j: f64, c_phi: f64| {
        c_phi
            + (nf + 1.0) * xd * sn / (nu * (nf - 2.0 + j))
            + nf * (nf + 1.0) * b * dg * sn / (ka * nu * (nf - 4.0 + j))
            + (nf * (nf + 1.0) / nu) * xc
            + nf * (nf + 1.0) * b * cg / (ka * nu)
    };
    let m0 = m_j(0.0, k.c_phi0);
    let m1 = m_j(1.0, k.c_phi1);
    let m_prime = k.c_eta1 + dg * sn / (ka * (nf - 1.0)) + cg / ka;
    let two_pi_n = (2.0 * PI).powf(-nf);
    let m = two_pi_n * nf * m0 * m1.max(m_prime);

    let n1 = k.d_eta1
        * (k.c_phi0
            + (nf + 1.0) * xd * sn / ((nf - 2.0) * nu)
            + (nf + 1.0) * xc / nu
            + (nf + 1.0) * nf * b / (nu * ka) * y(4.0))
        + k.c_phi0 / ka * y(1.0)
        + (nf + 1.0) / (ka * nu)
            * xd.powf(1.0 / 3.0)
            * y(3.0).powf(1.0 / 3.0)
            * z(3.0).powf(2.0 / 3.0)
            * dg.powf(2.0 / 3.0)
        + nf * (nf + 1.0) * b / (ka * ka * nu) * dg * y(5.0);

    let nb = nf * b / (nu * ka);
    let n2 = k.d_phi1 * k.c_phi0
        + (nf + 1.0) * k.d_phi0 * (xd * sn / (nu * (nf - 1.0)) + xc / nu + nb * y(3.0))
        + (nf + 1.0) * k.d_phi1 * (xd * sn / (nu * (nf - 2.0)) + xc / nu + nb * y(4.0))
        + nf * (nf + 1.0).powi(2) * b / (nu * nu * ka)
            * xd.powf(0.6)
            * dg.powf(0.4)
            * z(5.0).powf(0.4)
            * y(5.0).powf(0.6)
        + nf * (nf + 1.0).powi(2) * b / (nu * nu * ka)
            * xd.powf(0.8)
            * dg.powf(0.2)
            * z(5.0).powf(0.2)
            * y(5.0).powf(0.8)
        + nf * nf * (nf + 1.0).powi(2) * b * b / (nu * nu * ka * ka) * dg * y(7.0)
        + (nf + 1.0).powi(2) / (nu * nu) * z(3.0) * xd;
    let nn = nf * two_pi_n * n1.max(n2);
    Theorem41Constants { m0, m1, m_prime, m, n1, n2, n: nn }
}

/// Margins of `M < C` and `N < D`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub c: f64,
    pub d: f64,
    pub m: f64,
    pub n: f64,
    pub margin_c: f64,
    pub margin_d: f64,
}

impl Witness {
    pub fn margin(&self) -> f64 {
        self.margin_c.min(self.margin_d)
    }

    pub fn holds(&self) -> bool {
        self.m < self.c && self.n < self.d
    }
}

/// Logarithmic sweep settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub per_decade: u32,
    pub refine_steps: u32,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { lo: 1e-8, hi: 1e8, per_decade: 33, refine_steps: 20 }
    }
}

/// Best point of the sweep; `witness` is set only when both inequalities hold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityResult {
    pub best: Witness,
    pub feasible: bool,
    pub evaluations: u64,
}

fn score(c: f64, d: f64, k: &DataConstants, phys: &WholeSpacePhysics, n: usize) -> Witness {
    let t = evaluate_constants(c, d, k, phys, n);
    let margin_c = if t.m > 0.0 { c / t.m } else { f64::INFINITY };
    let margin_d = if t.n > 0.0 { d / t.n } else { f64::INFINITY };
    Witness { c, d, m: t.m, n: t.n, margin_c, margin_d }
}

/// Sweep `(C, D)` on a log grid, then refine around the best cell by
/// repeatedly halving the log step. The objective is `min(C/M, D/N)`; ties
/// keep the first point in `(C, D)` lexicographic order.
pub fn feasibility_search(
    k: &DataConstants,
    phys: &WholeSpacePhysics,
    n: usize,
    grid: &GridSpec,
) -> Result<FeasibilityResult> {
    if n < BOUSSINESQ_MIN_DIM {
        return Err(Error::DimensionGate {
            case: "Boussinesq feasibility".into(),
            required: BOUSSINESQ_MIN_DIM,
            got: n,
        });
    }
    k.validate()?;
    phys.validate()?;
    if !(grid.lo > 0.0 && grid.hi > grid.lo && grid.per_decade > 0) {
        return Err(Error::InvalidParameter("bad sweep grid".into()));
    }
    let l0 = grid.lo.log10();
    let l1 = grid.hi.log10();
    let steps = ((l1 - l0) * grid.per_decade as f64).round() as u64;
    let h = (l1 - l0) / steps as f64;
    let at = |i: u64| 10f64.powf(l0 + i as f64 * h);

    let mut evaluations = 0u64;
    let mut best = score(at(0), at(0), k, phys, n);
    let mut best_log = (l0, l0);
    for i in 0..=steps {
        let c = at(i);
        for j in 0..=steps {
            let d = at(j);
            let w = score(c, d, k, phys, n);
            evaluations += 1;
            if w.margin() > best.margin() {
                best = w;
                best_log = (l0 + i as f64 * h, l0 + j as f64 * h);
            }
        }
    }

    let mut step = h;
    for _ in 0..grid.refine_steps {
        step /= 2.0;
        let (lc, ld) = best_log;
        let mut moved = best_log;
        let mut cand_best = best;
        for dc in [-1.0, 0.0, 1.0] {
            for dd in [-1.0, 0.0, 1.0] {
                if dc == 0.0 && dd == 0.0 {
                    continue;
                }
                let (xc, xd) = (lc + dc * step, ld + dd * step);
                let w = score(10f64.powf(xc), 10f64.powf(xd), k, phys, n);
                evaluations += 1;
                if w.margin() > cand_best.margin() {
                    cand_best = w;
                    moved = (xc, xd);
                }
            }
        }
        best = cand_best;
        best_log = moved;
    }
    Ok(FeasibilityResult { best, feasible: best.holds(), evaluations })
}

/// Verdicts and margins (`rhs / lhs`) of the two Navier-Stokes inequalities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NsCondition {
    pub first_holds: bool,
    pub first_margin: f64,
    pub second_holds: bool,
    pub second_margin: f64,
}

impl NsCondition {
    pub fn holds(&self) -> bool {
        self.first_holds && self.second_holds
    }
}

/// The whole-space Navier-Stokes condition pair, `n >= 5`.
pub fn ns_rn_condition(c: f64, d: f64, k: &DataConstants, nu: f64, n: usize) -> Result<NsCondition> {
    if n < NS_MIN_DIM {
        return Err(Error::DimensionGate {
            case: "Navier-Stokes existence condition".into(),
            required: NS_MIN_DIM,
            got: n,
        });
    }
    check_cd(c, d)?;
    k.validate()?;
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter(format!("nu must be positive, got {nu}")));
    }
    let nf = n as f64;
    let sn = sphere_area(n as u32)?;
    let df = d + k.d_f0;
    let cf = c + k.c_f0;
    let lhs1 = k.d_phi1 / nu * (df * sn / (nf - 2.0) + cf)
        + k.d_phi0 / nu * (df * sn / (nf - 1.0) + cf)
        + k.d_phi1 * k.c_phi0
        + (df * sn / (nf - 3.0) + cf) * df / (nu * nu);
    let rhs1 = (2.0 * PI).powf(nf) * d / nf;
    let lhs2 = (k.c_phi0 + df * sn / (nu * (nf - 2.0)) + cf / nu)
        * (k.c_phi1 + df * sn / (nu * (nf - 1.0)) + cf / nu);
    let rhs2 = (2.0 * PI).powf(nf) * c / nf;
    Ok(NsCondition {
        first_holds: lhs1 < rhs1,
        first_margin: rhs1 / lhs1,
        second_holds: lhs2 < rhs2,
        second_margin: rhs2 / lhs2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phys(b: f64) -> WholeSpacePhysics {
        WholeSpacePhysics { nu: 1.0, kappa: 1.0, b }
    }

    #[test]
    fn single_gaussian_constants() {
        let e = GaussianExpansion::new(1.0, 1, vec![(vec![0], 1.0)]).unwrap();
        let (c, d) = data_constants(&e, 0).unwrap();
        assert!((c - PI.sqrt()).abs() < 1e-15);
        assert_eq!(d, 1.0);
        let empty = GaussianExpansion::new(1.0, 2, vec![]).unwrap();
        assert_eq!(data_constants(&empty, 1).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn sup_term_is_attained() {
        // |w|^1 w_1^2 e^{-2|w|^2} in 2D on the w_1 axis: max of x^3 e^{-2x^2}
        let v = sup_term(&[2, 0], 1, 2.0);
        let x: f64 = (3.0f64 / 4.0).sqrt();
        assert!((v - x.powi(3) * (-2.0 * x * x).exp()).abs() < 1e-15);
    }

    #[test]
    fn gates() {
        let k = DataConstants::default();
        assert!(matches!(
            theorem41_constants(1.0, 1.0, &k, &phys(0.0), 8),
            Err(Error::DimensionGate { required: 9, got: 8, .. })
        ));
        assert!(theorem41_constants(0.0, 1.0, &k, &phys(0.0), 9).is_err());
        assert!(ns_rn_condition(1.0, 1.0, &k, 1.0, 4).is_err());
        assert!(ns_rn_condition(0.0, 1.0, &k, 1.0, 5).is_err());
    }

    #[test]
    fn zero_data_vanishes_at_origin() {
        let k = DataConstants::default();
        let t = theorem41_constants(1e-12, 1e-12, &k, &phys(0.0), 9).unwrap();
        assert!(t.m < 1e-20 && t.n < 1e-20);
        let r = feasibility_search(&k, &phys(0.0), 9, &GridSpec { per_decade: 4, ..GridSpec::default() })
            .unwrap();
        assert!(r.feasible);
    }

    #[test]
    fn huge_data_is_infeasible() {
        let k = DataConstants::uniform(1e6);
        let r = feasibility_search(&k, &phys(1.0), 9, &GridSpec { per_decade: 4, ..GridSpec::default() })
            .unwrap();
        assert!(!r.feasible);
    }

    #[test]
    fn ns_small_inputs() {
        let k = DataConstants::default();
        let r = ns_rn_condition(1e-4, 1e-4, &k, 1.0, 5).unwrap();
        assert!(r.holds());
        let k = DataConstants::uniform(0.3);
        let a = ns_rn_condition(0.01, 0.01, &k, 1.0, 5).unwrap();
        let b = ns_rn_condition(0.01, 0.01, &k, 10.0, 5).unwrap();
        assert!(b.first_margin >= a.first_margin && b.second_margin >= a.second_margin);
    }
}
