//! Decay classes `J`, `K` (torus) and `G`, `H` (whole space), membership
//! tests on concrete fields, and the parameter updates under derivatives and
//! products.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{FourierField, Mode, TorusGeometry};

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")))
    }
}

/// `|a(theta)| <= d r^|theta| / prod |theta_k|!`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JParams {
    pub r: f64,
    pub d: f64,
}

impl JParams {
    pub fn new(r: f64, d: f64) -> Result<Self> {
        positive("r", r)?;
        positive("d", d)?;
        Ok(JParams { r, d })
    }

    pub fn bound(&self, m: &Mode) -> f64 {
        self.d * self.r.powi(m.l1() as i32) / m.abs_factorial()
    }
}

/// `|a(t, theta)| <= d r^|theta| e^{-bt} / prod |theta_k|!`.
///
/// `r = 0` is accepted: it describes data supported on the zero mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KParams {
    pub b: f64,
    pub r: f64,
    pub d: f64,
}

impl KParams {
    pub fn new(b: f64, r: f64, d: f64) -> Result<Self> {
        positive("b", b)?;
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("r must be nonnegative, got {r}")));
        }
        positive("d", d)?;
        Ok(KParams { b, r, d })
    }

    pub fn bound(&self, m: &Mode, t: f64) -> f64 {
        self.d * self.r.powi(m.l1() as i32) * (-self.b * t).exp() / m.abs_factorial()
    }

    /// Envelope mass beyond `horizon`: `(d/b) e^{-b T} (2e^r - 1)^n`.
    pub fn tail_integral(&self, horizon: f64, n: usize) -> f64 {
        self.d / self.b * (-self.b * horizon).exp() * (2.0 * self.r.exp() - 1.0).powi(n as i32)
    }
}

/// Whole-space spatial class `G(b, r, d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GParams {
    pub b: f64,
    pub r: f64,
    pub d: f64,
}

impl GParams {
    pub fn new(b: f64, r: f64, d: f64) -> Result<Self> {
        positive("b", b)?;
        positive("r", r)?;
        positive("d", d)?;
        Ok(GParams { b, r, d })
    }
}

/// Whole-space time-dependent class `H(b, r, c, d)` with `1 < c <= n/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HParams {
    pub b: f64,
    pub r: f64,
    pub c: f64,
    pub d: f64,
}

impl HParams {
    pub fn new(b: f64, r: f64, c: f64, d: f64, n: usize) -> Result<Self> {
        positive("b", b)?;
        positive("r", r)?;
        positive("d", d)?;
        check_c(c, n)?;
        Ok(HParams { b, r, c, d })
    }
}

fn check_c(c: f64, n: usize) -> Result<()> {
    if c > 1.0 && c <= n as f64 / 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "temporal exponent c = {c} outside (1, {}]",
            n as f64 / 2.0
        )))
    }
}

/// Any of the four families, tagged by `family` in documents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum ClassParams {
    J(JParams),
    K(KParams),
    G(GParams),
    H(HParams),
}

impl ClassParams {
    pub fn family(&self) -> &'static str {
        match self {
            ClassParams::J(_) => "J",
            ClassParams::K(_) => "K",
            ClassParams::G(_) => "G",
            ClassParams::H(_) => "H",
        }
    }
}

/// Outcome of a membership test. `margin` is the largest ratio of a
/// coefficient to its class bound; the verdict is `margin <= 1` up to a
/// relative slack of `1e-9`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Membership {
    pub holds: bool,
    pub margin: f64,
    pub worst_mode: Option<Mode>,
    pub worst_sample: Option<usize>,
}

pub const MEMBERSHIP_SLACK: f64 = 1e-9;

/// `|a| / bound` computed in logs so that large `bt` or `|theta|` stay finite.
fn log_ratio(abs: f64, log_bound: f64) -> f64 {
    if abs == 0.0 {
        0.0
    } else {
        (abs.ln() - log_bound).exp()
    }
}

fn log_spatial_bound(d: f64, r: f64, m: &Mode) -> f64 {
    let k = m.l1();
    let rk = if k == 0 { 0.0 } else { k as f64 * r.ln() };
    d.ln() + rk - m.abs_factorial().ln()
}

/// Membership in `K(b, r, d)` on the stored support at the chosen samples
/// (all samples when `samples` is `None`). Certifies the truncated field only.
pub fn check_membership_k(
    field: &FourierField,
    params: &KParams,
    samples: Option<&[usize]>,
) -> Result<Membership> {
    let grid = field.time_grid().ok_or(Error::ExpectedTimeSampled)?;
    let times = grid.samples();
    let all: Vec<usize> = (0..times.len()).collect();
    let idx = samples.unwrap_or(&all);
    if let Some(&i) = idx.iter().find(|&&i| i >= times.len()) {
        return Err(Error::IndexOutOfRange { index: i, len: times.len() });
    }
    let mut out = Membership {
        holds: true,
        margin: 0.0,
        worst_mode: None,
        worst_sample: None,
    };
    for (m, v) in field.iter() {
        let base = log_spatial_bound(params.d, params.r, m);
        for &i in idx {
            let ratio = log_ratio(v[i].norm(), base - params.b * times[i]);
            if ratio > out.margin || ratio.is_nan() {
                out.margin = ratio;
                out.worst_mode = Some(m.clone());
                out.worst_sample = Some(i);
            }
        }
    }
    out.holds = out.margin <= 1.0 + MEMBERSHIP_SLACK;
    Ok(out)
}

/// Membership in `J(r, d)` of a spatial field.
pub fn check_membership_j(field: &FourierField, params: &JParams) -> Result<Membership> {
    if !field.is_spatial() {
        return Err(Error::ExpectedSpatial);
    }
    let mut out = Membership {
        holds: true,
        margin: 0.0,
        worst_mode: None,
        worst_sample: None,
    };
    for (m, v) in field.iter() {
        let ratio = log_ratio(v[0].norm(), log_spatial_bound(params.d, params.r, m));
        if ratio > out.margin || ratio.is_nan() {
            out.margin = ratio;
            out.worst_mode = Some(m.clone());
        }
    }
    out.holds = out.margin <= 1.0 + MEMBERSHIP_SLACK;
    Ok(out)
}

/// Class of `d/dx_k` of a member (zero-based axis; used only for `J`, `K`).
pub fn derivative_class(
    params: &ClassParams,
    axis: usize,
    geometry: &TorusGeometry,
) -> Result<ClassParams> {
    let n = geometry.dim();
    if axis >= n {
        return Err(Error::AxisOutOfRange { axis, dim: n });
    }
    let lk = geometry.period(axis);
    Ok(match *params {
        ClassParams::J(p) => ClassParams::J(JParams { r: 2.0 * p.r, d: PI * p.d / lk }),
        ClassParams::K(p) => ClassParams::K(KParams { b: p.b, r: 2.0 * p.r, d: PI * p.d / lk }),
        ClassParams::G(p) => ClassParams::G(GParams { b: p.b, r: 2.0 * p.r, d: p.d / (p.r * p.r) }),
        ClassParams::H(p) => ClassParams::H(HParams {
            b: p.b,
            r: 2.0 * p.r,
            c: p.c,
            d: p.d / (p.r * p.r),
        }),
    })
}

/// The four torus product cases. `P` is the heat flow of `J` data, `Q` the
/// Duhamel integral of `K` data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TorusCase {
    #[serde(rename = "p_dp")]
    PdP,
    #[serde(rename = "p_dq")]
    PdQ,
    #[serde(rename = "q_dp")]
    QdP,
    #[serde(rename = "q_dq")]
    QdQ,
}

impl TorusCase {
    pub const ALL: [TorusCase; 4] = [TorusCase::PdP, TorusCase::PdQ, TorusCase::QdP, TorusCase::QdQ];

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "p_dp" | "pdp" => Ok(TorusCase::PdP),
            "p_dq" | "pdq" => Ok(TorusCase::PdQ),
            "q_dp" | "qdp" => Ok(TorusCase::QdP),
            "q_dq" | "qdq" => Ok(TorusCase::QdQ),
            _ => Err(Error::InvalidParameter(format!("unknown torus product case {s:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TorusCase::PdP => "p_dp",
            TorusCase::PdQ => "p_dq",
            TorusCase::QdP => "q_dp",
            TorusCase::QdQ => "q_dq",
        }
    }
}

/// Diffusion rate of the second factor: `kappa_2` for a heat flow,
/// `nu_2` for a Duhamel term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TorusRates {
    pub kappa2: Option<f64>,
    pub nu2: Option<f64>,
}

fn spatial_of(p: &ClassParams, want_k: bool, which: &str) -> Result<(f64, f64, f64)> {
    match (p, want_k) {
        (ClassParams::J(j), false) => Ok((0.0, j.r, j.d)),
        (ClassParams::K(k), true) => Ok((k.b, k.r, k.d)),
        _ => Err(Error::InvalidParameter(format!(
            "{which} must be {} parameters, got {}",
            if want_k { "K" } else { "J" },
            p.family()
        ))),
    }
}

/// `K` parameters of `x_1 d x_2 / dx_k` for the four torus cases.
pub fn product_class_torus(
    case: TorusCase,
    params1: &ClassParams,
    params2: &ClassParams,
    axis: usize,
    geometry: &TorusGeometry,
    rates: TorusRates,
) -> Result<KParams> {
    let n = geometry.dim();
    if axis >= n {
        return Err(Error::AxisOutOfRange { axis, dim: n });
    }
    let lk = geometry.period(axis);
    let q1 = matches!(case, TorusCase::QdP | TorusCase::QdQ);
    let q2 = matches!(case, TorusCase::PdQ | TorusCase::QdQ);
    let (b1, r1, d1) = spatial_of(params1, q1, "first factor")?;
    let (b2, r2, d2) = spatial_of(params2, q2, "second factor")?;
    let amp = PI * (1.0 + (2.0 * r1 + 2.0 * r2).exp()).powi(n as i32) * d1 * d2 / lk;
    let r = 2.0 * (r1 + r2);
    let (b, d) = if q2 {
        let nu2 = rates
            .nu2
            .ok_or_else(|| Error::InvalidParameter("case needs nu_2".into()))?;
        positive("nu_2", nu2)?;
        let m = (b2 / 2.0).min(2.0 * PI * PI * nu2 / (lk * lk));
        let d = if q1 { amp / (b1 * E * m) } else { amp / (E * m) };
        (m, d)
    } else {
        let kappa2 = rates
            .kappa2
            .ok_or_else(|| Error::InvalidParameter("case needs kappa_2".into()))?;
        positive("kappa_2", kappa2)?;
        let b = 4.0 * PI * PI * kappa2 / (lk * lk);
        let d = if q1 { amp / b1 } else { amp };
        (b, d)
    };
    Ok(KParams { b, r, d })
}

/// The nine whole-space product cases. `F` is the heat flow of `G` data,
/// `Gd` the Duhamel integral of `H` data, `Hd` a second Duhamel integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RnCase {
    #[serde(rename = "f_df")]
    FdF,
    #[serde(rename = "f_dg")]
    FdG,
    #[serde(rename = "g_df")]
    GdF,
    #[serde(rename = "g_dg")]
    GdG,
    #[serde(rename = "f_dh")]
    FdH,
    #[serde(rename = "h_df")]
    HdF,
    #[serde(rename = "g_dh")]
    GdH,
    #[serde(rename = "h_dg")]
    HdG,
    #[serde(rename = "h_dh")]
    HdH,
}

impl RnCase {
    pub const ALL: [RnCase; 9] = [
        RnCase::FdF,
        RnCase::FdG,
        RnCase::GdF,
        RnCase::GdG,
        RnCase::FdH,
        RnCase::HdF,
        RnCase::GdH,
        RnCase::HdG,
        RnCase::HdH,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RnCase::FdF => "f_df",
            RnCase::FdG => "f_dg",
            RnCase::GdF => "g_df",
            RnCase::GdG => "g_dg",
            RnCase::FdH => "f_dh",
            RnCase::HdF => "h_df",
            RnCase::GdH => "g_dh",
            RnCase::HdG => "h_dg",
            RnCase::HdH => "h_dh",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        RnCase::ALL
            .into_iter()
            .find(|c| c.name() == s || c.name().replace('_', "") == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown product case {s:?}")))
    }

    /// Smallest dimension for which the case's constant is defined.
    pub fn min_dim(&self) -> usize {
        match self {
            RnCase::FdF | RnCase::FdG | RnCase::GdF => 3,
            // the printed constant carries (n/2 - 2), positive only from n = 5
            RnCase::GdG => 5,
            RnCase::FdH | RnCase::HdF => 5,
            RnCase::GdH | RnCase::HdG => 7,
            RnCase::HdH => 9,
        }
    }
}

/// Diffusion rates `kappa_j` (heat flows), `nu_j` (first Duhamel),
/// `sigma_j` (second Duhamel) of both factors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RnRates {
    pub kappa: [f64; 2],
    pub nu: [f64; 2],
    pub sigma: [f64; 2],
}

impl Default for RnRates {
    fn default() -> Self {
        RnRates { kappa: [1.0; 2], nu: [1.0; 2], sigma: [1.0; 2] }
    }
}

fn whole_space_of(p: &ClassParams, want_h: bool, which: &str) -> Result<(f64, f64, f64)> {
    match (p, want_h) {
        (ClassParams::G(g), false) => Ok((g.b, g.r, g.d)),
        (ClassParams::H(h), true) => Ok((h.b, h.r, h.d)),
        _ => Err(Error::InvalidParameter(format!(
            "{which} must be {} parameters, got {}",
            if want_h { "H" } else { "G" },
            p.family()
        ))),
    }
}

/// `H` parameters of `x_1 d x_2 / dx_k` for the whole-space cases; `c` is
/// the ambient temporal exponent and is inherited by the output.
pub fn product_class_rn(
    case: RnCase,
    params1: &ClassParams,
    params2: &ClassParams,
    rates: &RnRates,
    c: f64,
    n: usize,
) -> Result<HParams> {
    if n < case.min_dim() {
        return Err(Error::DimensionGate {
            case: case.name().into(),
            required: case.min_dim(),
            got: n,
        });
    }
    check_c(c, n)?;
    for (name, v) in [
        ("kappa_1", rates.kappa[0]),
        ("kappa_2", rates.kappa[1]),
        ("nu_1", rates.nu[0]),
        ("nu_2", rates.nu[1]),
        ("sigma_1", rates.sigma[0]),
        ("sigma_2", rates.sigma[1]),
    ] {
        positive(name, v)?;
    }
    use RnCase::*;
    let h1 = !matches!(case, FdF | FdG | FdH);
    let h2 = !matches!(case, FdF | GdF | HdF);
    let (b1, r1, d1) = whole_space_of(params1, h1, "first factor")?;
    let (b2, r2, d2) = whole_space_of(params2, h2, "second factor")?;
    let [k1, k2] = rates.kappa;
    let [nu1, nu2] = rates.nu;
    let [s1, s2] = rates.sigma;

    let nf = n as f64;
    let bs = b1 + b2;
    let rr = r1 * r1 + r2 * r2;
    let common = (1.0 + rr / (2.0 * bs).sqrt()).powi(n as i32) * (nf * rr * rr / (4.0 * bs)).exp()
        * d1
        * d2
        / ((2.0 * PI).powf(nf / 2.0) * r2 * r2);
    let h = nf / 2.0;
    let denom = match case {
        FdF => bs.min(k1 + k2).powf(c),
        FdG => (c - 1.0) * bs.min(k1).powf(h),
        GdF => (c - 1.0) * bs.min(k2).powf(h),
        GdG => nu1 * nu2 * (h - 1.0) * (h - 2.0) * bs.powf(h - 2.0),
        FdH => nu2 * s2 * (h - 1.0) * (h - 2.0) * bs.powf(h - 2.0),
        HdF => nu1 * s1 * (h - 1.0) * (h - 2.0) * bs.powf(h - 2.0),
        GdH => nu1 * nu2 * s2 * (h - 1.0) * (h - 2.0) * (h - 3.0) * bs.powf(h - 3.0),
        HdG => s1 * nu1 * nu2 * (h - 1.0) * (h - 2.0) * (h - 3.0) * bs.powf(h - 3.0),
        HdH => {
            nu1 * nu2 * s1 * s2 * (h - 1.0) * (h - 2.0) * (h - 3.0) * (h - 4.0) * bs.powf(h - 4.0)
        }
    };
    Ok(HParams {
        b: b1 * b2 / bs,
        r: 2.0 * r1.max(r2),
        c,
        d: common / denom,
    })
}
