use std::time::Instant;

use super::problem::{ProblemDocument, ProblemOverrides};
use super::report::{CheckRecord, RunReport, SolveOutputs};
use super::suites::run_suite;
use super::{data_from_expansions, FeasibilitySystem, ScenarioConfig};
use crate::constants::{
    feasibility_search, ns_rn_condition, theorem41_constants, DataConstants,
    WholeSpacePhysics,
};
use crate::error::{Error, Result};
use crate::picard::{
    check_condition_t42, feasible_interval, iterate, kappa_prime, IterationState, ProblemKind,
    TorusProblem, Verdict,
};
use crate::propagators::DIV_TOL;
use crate::spectral::{FieldDocument, VectorFieldDocument};

/// Margins within this relative distance of 1 are flagged.
const NEAR_TOLERANCE: f64 = 0.01;

fn finish(mut report: RunReport, start: Instant) -> RunReport {
    for c in &report.checks {
        if let Some(m) = c.margin {
            if (m - 1.0).abs() <= NEAR_TOLERANCE {
                report.warnings.push(format!("check {} is near its threshold (margin {m})", c.name));
            }
        }
    }
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    report
}

/// Run the selected invariant suites. A failing check clears `passed`.
pub fn run_verify_lemmas(cfg: &ScenarioConfig) -> Result<RunReport> {
    let start = Instant::now();
    let verify = cfg.verify.clone().unwrap_or_default();
    let mut report = RunReport::new("verify-lemmas", cfg.seed, &[cfg.source.as_bytes()]);
    for suite in &verify.suites {
        log::info!("running suite {suite:?}");
        for c in run_suite(*suite, &verify, cfg.seed)? {
            report.push(c);
        }
    }
    Ok(finish(report, start))
}

fn load_problem(cfg: &ScenarioConfig, path: &std::path::Path) -> Result<(String, ProblemDocument)> {
    let full = cfg.resolve(path);
    let text = std::fs::read_to_string(&full)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", full.display())))?;
    let doc = ProblemDocument::from_json(&text)?;
    Ok((text, doc))
}

fn condition_record(problem: &TorusProblem, radius: f64) -> Result<CheckRecord> {
    let c = check_condition_t42(problem, radius)?;
    let mut rec = CheckRecord::new("smallness_condition", c.holds)
        .margin(c.margin)
        .num("kappa_prime", c.kappa_prime)
        .num("data_size", c.data_size)
        .num("radius", c.radius);
    match feasible_interval(c.kappa_prime, c.data_size) {
        Some((lo, hi)) => {
            rec = rec.num("interval_lo", lo).num("interval_hi", hi);
        }
        None => rec = rec.detail("no radius satisfies the condition"),
    }
    if problem.kind == ProblemKind::Boussinesq {
        rec = rec.detail("Navier-Stokes norm reused for the density system; verdict is empirical");
    }
    Ok(rec)
}

/// Picard solve of the configured problem.
pub fn run_solve(cfg: &ScenarioConfig) -> Result<RunReport> {
    let start = Instant::now();
    let solve = cfg
        .solve
        .as_ref()
        .ok_or_else(|| Error::Config("missing [solve] section".into()))?;
    let (text, doc) = load_problem(cfg, &solve.problem)?;
    let overrides = ProblemOverrides {
        mode_box: solve.mode_box,
        time_grid: solve.time_grid,
        ball_radius: solve.ball_radius,
        truncation_cap: solve.truncation_cap,
    };
    let problem = doc.build(&overrides)?;
    let mut report = RunReport::new("solve", cfg.seed, &[cfg.source.as_bytes(), text.as_bytes()]);

    let fp = iterate(&problem, IterationState::initial(&problem)?, solve.max_iter, solve.tol)?;
    // condition at the reference radius; it is informational for the verdict
    let mut cond = condition_record(&problem, fp.reference_radius)?;
    let cond_passed = cond.passed;
    cond.passed = true;
    cond = cond.num("holds", if cond_passed { 1.0 } else { 0.0 });
    if !cond_passed {
        report
            .warnings
            .push(format!("smallness condition fails (margin {})", fp.reference_margin));
    }
    report.checks.push(cond);

    let last = fp.records.last().expect("at least one record");
    report.push(
        CheckRecord::new("fixed_point", fp.verdict == Verdict::Converged)
            .margin(solve.tol / last.residual_norm)
            .num("iterations", last.iteration as f64)
            .num("residual", last.residual_norm)
            .num("tol", solve.tol)
            .detail(format!("{:?}", fp.verdict)),
    );
    let div = fp.max_divergence();
    report.push(
        CheckRecord::new("divergence_free", div <= DIV_TOL)
            .margin(if div > 0.0 { DIV_TOL / div } else { f64::INFINITY })
            .num("max_divergence", div),
    );
    let loss = fp.records.iter().map(|r| r.truncation_loss).fold(0.0, f64::max);
    if loss > 0.0 {
        report.warnings.push(format!("largest truncation loss per map application {loss:e}"));
    }
    if solve.write_fields {
        let st = &fp.state;
        report.outputs = Some(SolveOutputs {
            r: VectorFieldDocument::from(&st.r),
            u: VectorFieldDocument::from(st.u.as_ref().expect("cached by iterate")),
            p: FieldDocument::from(&st.p.as_ref().expect("cached by iterate").field),
            h: st.h.as_ref().map(VectorFieldDocument::from),
            rho: st.rho.as_ref().map(VectorFieldDocument::from),
        });
    }
    report.verdict = Some(fp.verdict);
    report.series = fp.records;
    Ok(finish(report, start))
}

fn resolve_data(
    data: &Option<DataConstants>,
    exp: &Option<super::ExpansionInputs>,
    n: usize,
) -> Result<DataConstants> {
    match (data, exp) {
        (Some(_), Some(_)) => Err(Error::Config("give either data or expansions, not both".into())),
        (Some(d), None) => {
            d.validate().map_err(|e| Error::Config(e.to_string()))?;
            Ok(*d)
        }
        (None, Some(e)) => data_from_expansions(e, n),
        (None, None) => Ok(DataConstants::default()),
    }
}

/// Existence-condition search for the configured system.
pub fn run_feasibility(cfg: &ScenarioConfig) -> Result<RunReport> {
    let start = Instant::now();
    let f = cfg
        .feasibility
        .as_ref()
        .ok_or_else(|| Error::Config("missing [feasibility] section".into()))?;
    let mut inputs: Vec<Vec<u8>> = vec![cfg.source.clone().into_bytes()];
    let mut report;
    match f.system {
        FeasibilitySystem::Boussinesq => {
            let n = f.n.ok_or_else(|| Error::Config("feasibility needs n".into()))?;
            let data = resolve_data(&f.data, &f.expansions, n)?;
            let phys = WholeSpacePhysics { nu: f.nu, kappa: f.kappa, b: f.b };
            let grid = f.grid.unwrap_or_default();
            let res = feasibility_search(&data, &phys, n, &grid)?;
            report = RunReport::new("feasibility", cfg.seed, &[inputs[0].as_slice()]);
            let w = res.best;
            report.push(
                CheckRecord::new("boussinesq_witness", res.feasible)
                    .margin(w.margin())
                    .num("C", w.c)
                    .num("D", w.d)
                    .num("M", w.m)
                    .num("N", w.n)
                    .num("margin_c", w.margin_c)
                    .num("margin_d", w.margin_d)
                    .num("evaluations", res.evaluations as f64)
                    .detail(if res.feasible { "witness found" } else { "EMPTY; closest approach reported" }),
            );
            if res.feasible {
                let t = theorem41_constants(w.c, w.d, &data, &phys, n)?;
                report.push(
                    CheckRecord::new("witness_reevaluation", t.m < w.c && t.n < w.d)
                        .margin((w.c / t.m).min(w.d / t.n))
                        .num("M", t.m)
                        .num("N", t.n),
                );
            }
        }
        FeasibilitySystem::NavierStokesRn => {
            let n = f.n.ok_or_else(|| Error::Config("feasibility needs n".into()))?;
            let data = resolve_data(&f.data, &f.expansions, n)?;
            let (c, d) = match (f.c, f.d) {
                (Some(c), Some(d)) => (c, d),
                _ => return Err(Error::Config("navier_stokes_rn needs c and d".into())),
            };
            let r = ns_rn_condition(c, d, &data, f.nu, n)?;
            report = RunReport::new("feasibility", cfg.seed, &[inputs[0].as_slice()]);
            report.push(
                CheckRecord::new("ns_rn_first", r.first_holds)
                    .margin(r.first_margin)
                    .num("C", c)
                    .num("D", d),
            );
            report.push(
                CheckRecord::new("ns_rn_second", r.second_holds)
                    .margin(r.second_margin)
                    .num("C", c)
                    .num("D", d),
            );
        }
        FeasibilitySystem::Torus => {
            let (kp, a) = match &f.problem {
                Some(p) => {
                    let (text, doc) = load_problem(cfg, p)?;
                    inputs.push(text.into_bytes());
                    let problem = doc.build(&ProblemOverrides::default())?;
                    (problem.kappa_prime(), problem.data_size()?)
                }
                None => {
                    let n = f.n.ok_or_else(|| Error::Config("torus feasibility needs n or a problem".into()))?;
                    let l = f.max_period.ok_or_else(|| Error::Config("torus feasibility needs max_period".into()))?;
                    (kappa_prime(n, l, f.nu), f.data_size.unwrap_or(0.0))
                }
            };
            let parts: Vec<&[u8]> = inputs.iter().map(|v| v.as_slice()).collect();
            report = RunReport::new("feasibility", cfg.seed, &parts);
            let threshold = 1.0 / (8.0 * kp);
            let mut rec = match feasible_interval(kp, a) {
                Some((lo, hi)) => CheckRecord::new("torus_radius_interval", true)
                    .margin(threshold / a)
                    .num("lo", lo)
                    .num("hi", hi),
                None => CheckRecord::new("torus_radius_interval", false)
                    .margin(threshold / a)
                    .detail("EMPTY"),
            };
            rec = rec.num("kappa_prime", kp).num("data_size", a).num("data_threshold", threshold);
            report.push(rec);
        }
    }
    Ok(finish(report, start))
}

/// Evaluate the constants at one `(C, D)`.
pub fn run_constants(cfg: &ScenarioConfig) -> Result<RunReport> {
    let start = Instant::now();
    let c = cfg
        .constants
        .as_ref()
        .ok_or_else(|| Error::Config("missing [constants] section".into()))?;
    let data = resolve_data(&c.data, &c.expansions, c.n)?;
    let phys = WholeSpacePhysics { nu: c.nu, kappa: c.kappa, b: c.b };
    let t = theorem41_constants(c.c, c.d, &data, &phys, c.n)?;
    let mut report = RunReport::new("constants", cfg.seed, &[cfg.source.as_bytes()]);
    let mut data_rec = CheckRecord::new("data_constants", true);
    let d = &data;
    for (k, v) in [
        ("c_phi0", d.c_phi0),
        ("c_phi1", d.c_phi1),
        ("c_eta0", d.c_eta0),
        ("c_eta1", d.c_eta1),
        ("c_f0", d.c_f0),
        ("c_g0", d.c_g0),
        ("d_phi0", d.d_phi0),
        ("d_phi1", d.d_phi1),
        ("d_eta0", d.d_eta0),
        ("d_eta1", d.d_eta1),
        ("d_f0", d.d_f0),
        ("d_g0", d.d_g0),
    ] {
        data_rec = data_rec.num(k, v);
    }
    report.push(data_rec);
    report.push(
        CheckRecord::new("existence_inequalities", t.m < c.c && t.n < c.d)
            .margin((c.c / t.m).min(c.d / t.n))
            .num("C", c.c)
            .num("D", c.d)
            .num("M0", t.m0)
            .num("M1", t.m1)
            .num("M_prime", t.m_prime)
            .num("M", t.m)
            .num("N1", t.n1)
            .num("N2", t.n2)
            .num("N", t.n),
    );
    Ok(finish(report, start))
}

#[cfg(test)]
mod tests {
    use super::super::{FeasibilityConfig, VerifyConfig};
    use super::*;

    #[test]
    fn empty_suite_selection() {
        let mut cfg = ScenarioConfig::empty();
        cfg.verify = Some(VerifyConfig { suites: vec![], ..Default::default() });
        let r = run_verify_lemmas(&cfg).unwrap();
        assert!(r.passed && r.checks.is_empty());
    }

    #[test]
    fn gate_errors_surface() {
        let mut cfg = ScenarioConfig::empty();
        cfg.feasibility = Some(FeasibilityConfig {
            system: FeasibilitySystem::Boussinesq,
            n: Some(7),
            nu: 1.0,
            kappa: 1.0,
            b: 0.0,
            data: None,
            expansions: None,
            grid: None,
            c: None,
            d: None,
            problem: None,
            max_period: None,
            data_size: None,
        });
        let e = run_feasibility(&cfg).unwrap_err();
        assert!(matches!(e, Error::DimensionGate { required: 9, got: 7, .. }));
        assert!(!e.is_usage());
    }

    #[test]
    fn torus_interval_at_zero_data() {
        let mut cfg = ScenarioConfig::empty();
        cfg.feasibility = Some(FeasibilityConfig {
            system: FeasibilitySystem::Torus,
            n: Some(3),
            nu: 1.0,
            kappa: 1.0,
            b: 0.0,
            data: None,
            expansions: None,
            grid: None,
            c: None,
            d: None,
            problem: None,
            max_period: Some(1.0),
            data_size: Some(0.0),
        });
        let r = run_feasibility(&cfg).unwrap();
        let c = r.check("torus_radius_interval").unwrap();
        assert!(c.passed);
        let kp = kappa_prime(3, 1.0, 1.0);
        assert!((c.get("hi").unwrap() - 1.0 / (4.0 * kp)).abs() < 1e-15);
    }
}
