//! Plain Picard iteration of `r -> -u . grad u` (and `h -> -u . grad rho`
//! for the Boussinesq system) with the smallness condition that makes the
//! map a self-map of a ball.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::classes::KParams;
use crate::error::{Error, Result};
use crate::propagators::{
    max_divergence, poisson_solve, reconstruct_density, reconstruct_velocity, AnchoredScalar,
    PhysicsParams, DIV_TOL,
};
use crate::spectral::{
    convolve, norm_i, norm_i_vector, norm_ibar_vector, partial_derivative, FourierField, ModeBox,
    TimeGrid, TorusGeometry, VectorField,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    NavierStokes,
    Boussinesq,
}

/// Periodic initial-value problem with its discretization.
#[derive(Clone, Debug)]
pub struct TorusProblem {
    pub geometry: TorusGeometry,
    pub physics: PhysicsParams,
    pub kind: ProblemKind,
    pub grid: Arc<TimeGrid>,
    /// Global truncation box for every product.
    pub mode_limit: ModeBox,
    pub phi: VectorField,
    pub f: VectorField,
    pub eta: Option<VectorField>,
    pub g: Option<VectorField>,
    pub anchor: Vec<f64>,
    pub p0: Vec<f64>,
    /// Radius of the ball the engine reports margins against.
    pub ball_radius: Option<f64>,
    /// Class envelope added to `I` beyond the horizon.
    pub tail: Option<KParams>,
    /// Hard cap on the l1 mass dropped by one application of the map.
    pub truncation_cap: Option<f64>,
}

impl TorusProblem {
    /// Validate shapes and require `div phi = 0` to within `1e-10`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        physics: PhysicsParams,
        kind: ProblemKind,
        grid: Arc<TimeGrid>,
        mode_limit: ModeBox,
        phi: VectorField,
        f: VectorField,
        eta: Option<VectorField>,
        g: Option<VectorField>,
        anchor: Vec<f64>,
        p0: Vec<f64>,
    ) -> Result<Self> {
        let geometry = phi.geometry().clone();
        let n = geometry.dim();
        physics.validate(Some(n))?;
        if !phi.is_spatial() {
            return Err(Error::ExpectedSpatial);
        }
        geometry.check_same(f.geometry())?;
        if mode_limit.dim() != n {
            return Err(Error::GeometryMismatch("mode limit dimension".into()));
        }
        let f = f.promote(&grid)?;
        if anchor.len() != n {
            return Err(Error::GeometryMismatch("anchor point dimension".into()));
        }
        if p0.len() != grid.len() {
            return Err(Error::TimeGridMismatch(format!(
                "anchor values have {} entries, grid has {}",
                p0.len(),
                grid.len()
            )));
        }
        let div = max_divergence(&phi)?;
        if div > DIV_TOL {
            return Err(Error::NotDivergenceFree(div));
        }
        let (eta, g) = match kind {
            ProblemKind::NavierStokes => (None, None),
            ProblemKind::Boussinesq => {
                let eta = eta.ok_or_else(|| {
                    Error::InvalidParameter("Boussinesq problem needs initial density".into())
                })?;
                let g = match g {
                    Some(g) => g.promote(&grid)?,
                    None => VectorField::zeros(
                        &FourierField::time_sampled(geometry.clone(), grid.clone(), eta.component(0).mode_box().clone())?,
                    ),
                };
                if physics.a.is_empty() {
                    return Err(Error::InvalidParameter(
                        "Boussinesq problem needs the coupling matrix".into(),
                    ));
                }
                (Some(eta), Some(g))
            }
        };
        Ok(TorusProblem {
            geometry,
            physics,
            kind,
            grid,
            mode_limit,
            phi,
            f,
            eta,
            g,
            anchor,
            p0,
            ball_radius: None,
            tail: None,
            truncation_cap: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    /// Zero vector field on the problem's grid.
    pub fn zero_time_field(&self) -> Result<VectorField> {
        let t = FourierField::time_sampled(self.geometry.clone(), self.grid.clone(), self.mode_limit.clone())?;
        Ok(VectorField::zeros(&t))
    }

    /// `A = Ibar(phi) + 2 I(f)`.
    pub fn data_size(&self) -> Result<f64> {
        Ok(norm_ibar_vector(&self.phi)? + 2.0 * norm_i_vector(&self.f, self.tail.as_ref())?)
    }

    /// `kappa' = n max_p l_p / (2 pi nu)`.
    pub fn kappa_prime(&self) -> f64 {
        kappa_prime(self.dim(), self.geometry.max_period(), self.physics.nu)
    }
}

pub fn kappa_prime(n: usize, max_period: f64, nu: f64) -> f64 {
    n as f64 * max_period / (2.0 * PI * nu)
}

/// Iteration variables plus the fields built from them by the last map application.
#[derive(Clone, Debug)]
pub struct IterationState {
    pub r: VectorField,
    pub h: Option<VectorField>,
    pub iteration: usize,
    pub u: Option<VectorField>,
    pub rho: Option<VectorField>,
    pub p: Option<AnchoredScalar>,
}

impl IterationState {
    /// `r = 0` (and `h = 0` for Boussinesq), the center of the ball.
    pub fn initial(problem: &TorusProblem) -> Result<Self> {
        let zero = problem.zero_time_field()?;
        Ok(IterationState {
            h: match problem.kind {
                ProblemKind::Boussinesq => Some(zero.clone()),
                ProblemKind::NavierStokes => None,
            },
            r: zero,
            iteration: 0,
            u: None,
            rho: None,
            p: None,
        })
    }

    pub fn with_r(problem: &TorusProblem, r: VectorField) -> Result<Self> {
        let mut s = IterationState::initial(problem)?;
        s.r = r.promote(&problem.grid)?;
        Ok(s)
    }
}

/// Result of one application of the map.
#[derive(Clone, Debug)]
pub struct MapImage {
    pub r: VectorField,
    pub h: Option<VectorField>,
    pub u: VectorField,
    pub rho: Option<VectorField>,
    pub p: AnchoredScalar,
    pub truncation_loss: f64,
}

/// `-sum_j a_j d b_k / dx_j` for every component `k`, truncated to `limit`.
pub fn advect(a: &VectorField, b: &VectorField, limit: &ModeBox) -> Result<(VectorField, f64)> {
    let n = a.dim();
    let mut loss = 0.0;
    let mut comps = Vec::with_capacity(b.dim());
    for bk in b.components() {
        let mut acc: Option<FourierField> = None;
        for j in 0..n {
            let d = partial_derivative(bk, j)?;
            if d.is_empty() || a.component(j).is_empty() {
                continue;
            }
            let out_box = a.component(j).mode_box().sum(d.mode_box()).clip(limit);
            let prod = convolve(a.component(j), &d, &out_box)?;
            loss += prod.truncation_loss();
            acc = Some(match acc {
                None => prod,
                Some(s) => s.add(&prod)?,
            });
        }
        let mut term = match acc {
            Some(s) => s.neg(),
            None => bk.zeros_like(),
        };
        term.set_truncation_loss(0.0);
        comps.push(
            term.with_mode_box(limit.clone())
                .map_err(|_| Error::InvalidParameter("advected field left the mode limit".into()))?,
        );
    }
    Ok((VectorField::new(comps)?, loss))
}

/// One application of the map `T`.
pub fn apply_t(problem: &TorusProblem, state: &IterationState) -> Result<MapImage> {
    let grid = &problem.grid;
    let rho = match problem.kind {
        ProblemKind::Boussinesq => Some(reconstruct_density(
            problem.eta.as_ref().expect("validated"),
            problem.g.as_ref().expect("validated"),
            state.h.as_ref(),
            problem.physics.kappa,
            grid,
        )?),
        ProblemKind::NavierStokes => None,
    };
    let coupling = rho.as_ref().map(|r| (r, problem.physics.a.as_slice()));
    let vel = reconstruct_velocity(&problem.phi, &state.r, &problem.f, coupling, problem.physics.nu, grid)?;
    let u = vel.u;
    let (r_new, mut loss) = advect(&u, &u, &problem.mode_limit)?;
    let h_new = match &rho {
        Some(rho) => {
            let (h, l) = advect(&u, rho, &problem.mode_limit)?;
            loss += l;
            Some(h)
        }
        None => None,
    };
    if let Some(cap) = problem.truncation_cap {
        if loss > cap {
            return Err(Error::TruncationCap { loss, cap });
        }
    }
    let p = poisson_solve(&vel.source, &problem.anchor, &problem.p0)?;
    Ok(MapImage { r: r_new, h: h_new, u, rho, p, truncation_loss: loss })
}

/// Outcome of the smallness test `kappa' (A + 2C)^2 < C` at one radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub holds: bool,
    pub margin: f64,
    pub kappa_prime: f64,
    pub data_size: f64,
    pub radius: f64,
}

/// `margin = C / (kappa' (A + 2C)^2)`; the condition holds when `margin > 1`.
pub fn condition_margin(kappa_prime: f64, a: f64, c: f64) -> f64 {
    c / (kappa_prime * (a + 2.0 * c).powi(2))
}

pub fn check_condition_t42(problem: &TorusProblem, c: f64) -> Result<ConditionCheck> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {c}")));
    }
    let kp = problem.kappa_prime();
    let a = problem.data_size()?;
    let margin = condition_margin(kp, a, c);
    Ok(ConditionCheck { holds: margin > 1.0, margin, kappa_prime: kp, data_size: a, radius: c })
}

/// Open interval of radii `C` with `kappa' (A + 2C)^2 < C`, if any.
pub fn feasible_interval(kappa_prime: f64, a: f64) -> Option<(f64, f64)> {
    let qa = 4.0 * kappa_prime;
    let qb = 4.0 * kappa_prime * a - 1.0;
    let qc = kappa_prime * a * a;
    let disc = qb * qb - 4.0 * qa * qc;
    if !(disc > 0.0) {
        return None;
    }
    let s = disc.sqrt();
    // stable pair of roots
    let q = -0.5 * (qb - s);
    let hi = q / qa;
    let lo = if q != 0.0 { qc / q } else { 0.0 };
    if hi > 0.0 && lo >= 0.0 && lo < hi {
        Some((lo, hi))
    } else {
        None
    }
}

pub fn feasible_c_interval(problem: &TorusProblem) -> Result<Option<(f64, f64)>> {
    Ok(feasible_interval(problem.kappa_prime(), problem.data_size()?))
}

/// Radius used for margins when no iterate supplies one: the problem's own,
/// else the margin-maximizing `A/2`, else the middle of `(0, 1/(4 kappa'))`.
pub fn reference_radius(problem: &TorusProblem) -> Result<f64> {
    if let Some(c) = problem.ball_radius {
        return Ok(c);
    }
    let a = problem.data_size()?;
    if a > 0.0 {
        Ok(a / 2.0)
    } else {
        Ok(1.0 / (8.0 * problem.kappa_prime()))
    }
}

/// Per-component residual norms of a state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residuals {
    pub r: Vec<f64>,
    pub h: Vec<f64>,
    pub divergence: f64,
    pub anchor_error: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.r.iter().chain(&self.h).cloned().fold(0.0, f64::max)
    }
}

fn residual_parts(
    problem: &TorusProblem,
    state: &IterationState,
    image: &MapImage,
) -> Result<Residuals> {
    let tail = problem.tail.as_ref();
    let r = state
        .r
        .components()
        .iter()
        .zip(image.r.components())
        .map(|(a, b)| norm_i(&a.sub(b)?, tail))
        .collect::<Result<Vec<_>>>()?;
    let h = match (&state.h, &image.h) {
        (Some(h), Some(t)) => h
            .components()
            .iter()
            .zip(t.components())
            .map(|(a, b)| norm_i(&a.sub(b)?, tail))
            .collect::<Result<Vec<_>>>()?,
        _ => Vec::new(),
    };
    Ok(Residuals {
        r,
        h,
        divergence: max_divergence(&image.u)?,
        anchor_error: image.p.anchor_error()?,
    })
}

/// `I(r_k + (u . grad u)_k)` (and the density analogue) for each `k`.
pub fn residual_fields(problem: &TorusProblem, state: &IterationState) -> Result<Residuals> {
    let image = apply_t(problem, state)?;
    residual_parts(problem, state, &image)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converged,
    MaxIterations,
    Diverged,
}

/// One row of the iteration history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `max_k I(T(r)_k - r_k)`, the size of the step taken from this iterate.
    #[serde(with = "crate::serde_float")]
    pub update_norm: f64,
    /// `max_k I(r_k + (u . grad u)_k)` at this iterate (density terms included).
    #[serde(with = "crate::serde_float")]
    pub residual_norm: f64,
    /// `max_k I(r_k)`.
    #[serde(with = "crate::serde_float")]
    pub ball_norm: f64,
    /// Ratio of this step to the previous one.
    #[serde(with = "crate::serde_float::option")]
    pub contraction: Option<f64>,
    /// Smallness margin at radius `max(ball_norm, reference_radius)`.
    #[serde(with = "crate::serde_float")]
    pub condition_margin: f64,
    #[serde(with = "crate::serde_float")]
    pub divergence: f64,
    #[serde(with = "crate::serde_float")]
    pub anchor_error: f64,
    #[serde(with = "crate::serde_float")]
    pub truncation_loss: f64,
}

/// Complete history and final fields of a run.
#[derive(Clone, Debug)]
pub struct FixedPointReport {
    pub records: Vec<IterationRecord>,
    pub verdict: Verdict,
    pub reference_radius: f64,
    pub reference_margin: f64,
    pub state: IterationState,
}

impl FixedPointReport {
    pub fn final_residual(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.residual_norm)
    }

    pub fn max_divergence(&self) -> f64 {
        self.records.iter().map(|r| r.divergence).fold(0.0, f64::max)
    }
}

/// Divergence verdict: a step this many times its running minimum.
pub const DIVERGENCE_FACTOR: f64 = 10.0;

/// Iterate `r <- T(r)` from `initial` until the residual drops below `tol`,
/// the step grows past ten times its running minimum, or `max_iter` steps
/// have been taken. Record `i` describes iterate `i`.
pub fn iterate(
    problem: &TorusProblem,
    initial: IterationState,
    max_iter: usize,
    tol: f64,
) -> Result<FixedPointReport> {
    if max_iter < 1 {
        return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let kp = problem.kappa_prime();
    let a = problem.data_size()?;
    let c_ref = reference_radius(problem)?;
    let reference_margin = condition_margin(kp, a, c_ref);
    let tail = problem.tail.as_ref();

    let mut state = initial;
    let mut records = Vec::new();
    let mut min_update = f64::INFINITY;
    let mut prev_update: Option<f64> = None;
    let verdict = loop {
        let image = apply_t(problem, &state)?;
        let res = residual_parts(problem, &state, &image)?;
        let update = res.max();
        let ball = norm_i_vector(&state.r, tail)?;
        // smallest admissible ball around the iterate, never below the reference
        let c_i = ball.max(c_ref);
        records.push(IterationRecord {
            iteration: state.iteration,
            update_norm: update,
            residual_norm: update,
            ball_norm: ball,
            contraction: prev_update.map(|p| if p > 0.0 { update / p } else { f64::INFINITY }),
            condition_margin: condition_margin(kp, a, c_i),
            divergence: res.divergence,
            anchor_error: res.anchor_error,
            truncation_loss: image.truncation_loss,
        });
        log::debug!("iteration {} residual {update:e}", state.iteration);

        state.u = Some(image.u);
        state.rho = image.rho;
        state.p = Some(image.p);
        if update < tol {
            break Verdict::Converged;
        }
        if !update.is_finite() || update > DIVERGENCE_FACTOR * min_update {
            break Verdict::Diverged;
        }
        if state.iteration >= max_iter {
            break Verdict::MaxIterations;
        }
        min_update = min_update.min(update);
        prev_update = Some(update);
        state = IterationState {
            r: image.r,
            h: image.h,
            iteration: state.iteration + 1,
            u: None,
            rho: None,
            p: None,
        };
    };
    Ok(FixedPointReport { records, verdict, reference_radius: c_ref, reference_margin, state })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_at_zero_data() {
        let kp = kappa_prime(3, 1.0, 1.0);
        let (lo, hi) = feasible_interval(kp, 0.0).unwrap();
        assert_eq!(lo, 0.0);
        assert!((hi - PI / 6.0).abs() < 1e-15);
    }

    #[test]
    fn threshold_is_one_over_eight_kappa_prime() {
        let kp = kappa_prime(3, 1.0, 1.0);
        let a_star = 1.0 / (8.0 * kp);
        assert!(feasible_interval(kp, a_star * (1.0 - 1e-9)).is_some());
        assert!(feasible_interval(kp, a_star * (1.0 + 1e-9)).is_none());
        assert!(feasible_interval(kp, 1e6).is_none());
    }

    #[test]
    fn margin_examples() {
        let kp = kappa_prime(3, 1.0, 1.0);
        let m = condition_margin(kp, 0.1, 0.1);
        assert!((kp * 0.09 - 0.042_971_834_5).abs() < 1e-9);
        assert!((m - 2.327_105_669).abs() < 1e-8);
        // kappa' = 1 exactly: n = 2, l = pi, nu = 1
        let kp = kappa_prime(2, PI, 1.0);
        assert_eq!(kp, 1.0);
        assert_eq!(condition_margin(kp, 0.0, 0.25), 1.0);
    }

    #[test]
    fn interval_endpoints_bracket_condition() {
        for &a in &[0.0, 0.01, 0.1, 0.2] {
            let kp = kappa_prime(3, 1.0, 1.0);
            if let Some((lo, hi)) = feasible_interval(kp, a) {
                for s in [0.01, 0.3, 0.5, 0.7, 0.99] {
                    let c = lo + s * (hi - lo);
                    assert!(condition_margin(kp, a, c) > 1.0);
                }
            }
        }
    }
}
