use std::path::{Path, PathBuf};

use picard_core::scenario::{
    emit_csv_series, parse_csv_series, run_constants, run_feasibility, run_solve,
    run_verify_lemmas, RunReport, ScenarioConfig, Series,
};
use picard_core::{Error, Verdict};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn cfg(text: &str) -> ScenarioConfig {
    ScenarioConfig::from_toml(text, &fixtures()).unwrap()
}

#[test]
fn fault_injection_breaks_the_moment_check() {
    let base = cfg("schema_version = 1\n[verify]\nsuites = [\"gaussian_moments\"]\n");
    assert!(run_verify_lemmas(&base).unwrap().passed);
    let bad = cfg("schema_version = 1\n[verify]\nsuites = [\"gaussian_moments\"]\ndouble_factorial_minus_one = 2.0\n");
    let r = run_verify_lemmas(&bad).unwrap();
    assert!(!r.passed);
    assert!(!r.check("gaussian_moment_closed_forms").unwrap().passed);
}

#[test]
fn closure_and_bilinear_suites_pass() {
    let c = cfg("schema_version = 1\nseed = 3\n[verify]\nsuites = [\"lemma35\", \"derivative_closure\", \"torus_closure\", \"sphere_area\"]\n");
    let r = run_verify_lemmas(&c).unwrap();
    for check in &r.checks {
        assert!(check.passed, "{}: {:?}", check.name, check.margin);
    }
    assert_eq!(r.checks.len(), 1 + 1 + 4 + 1);
}

#[test]
fn solve_series_export_round_trips() {
    let c = ScenarioConfig::from_path(&fixtures().join("solve-small-swirl.toml")).unwrap();
    let r = run_solve(&c).unwrap();
    assert_eq!(r.verdict, Some(Verdict::Converged));
    for s in [Series::Residuals, Series::UpdateNorms, Series::ConditionMargins] {
        let text = emit_csv_series(&r, s).unwrap();
        let (col, rows) = parse_csv_series(&text).unwrap();
        assert_eq!(col, s.column());
        assert_eq!(rows.len(), r.series.len());
        for ((i, v), want) in rows.iter().zip(s.values(&r)) {
            assert_eq!(v.to_bits(), want.to_bits(), "row {i}");
        }
    }
    let back = RunReport::from_json(&r.to_json().unwrap()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn digest_tracks_the_problem_document() {
    let a = ScenarioConfig::from_path(&fixtures().join("solve-small-swirl.toml")).unwrap();
    let b = ScenarioConfig::from_path(&fixtures().join("solve-condition-violating.toml")).unwrap();
    let ra = run_solve(&a).unwrap();
    assert_eq!(ra.input_digest.len(), 64);
    assert_eq!(ra.input_digest, run_solve(&a).unwrap().input_digest);
    assert_ne!(ra.input_digest, run_solve(&b).unwrap().input_digest);
}

#[test]
fn zero_data_feasibility_reports_a_witness() {
    let c = ScenarioConfig::from_path(&fixtures().join("feasibility-zero-data.toml")).unwrap();
    let r = run_feasibility(&c).unwrap();
    assert!(r.passed);
    let w = r.check("boussinesq_witness").unwrap();
    assert!(w.get("M").unwrap() < w.get("C").unwrap());
    assert!(w.get("N").unwrap() < w.get("D").unwrap());
    assert!(r.check("witness_reevaluation").unwrap().margin.unwrap() > 1.0);
}

#[test]
fn huge_data_is_empty() {
    let c = cfg(
        "schema_version = 1\n[feasibility]\nsystem = \"boussinesq\"\nn = 9\n\
         [feasibility.grid]\nlo = 1e-8\nhi = 1e8\nper_decade = 8\nrefine_steps = 4\n\
         [feasibility.data]\nc_phi0 = 1e6\nc_phi1 = 1e6\nc_eta0 = 1e6\nc_eta1 = 1e6\nc_f0 = 1e6\nc_g0 = 1e6\n\
         d_phi0 = 1e6\nd_phi1 = 1e6\nd_eta0 = 1e6\nd_eta1 = 1e6\nd_f0 = 1e6\nd_g0 = 1e6\n",
    );
    let r = run_feasibility(&c).unwrap();
    assert!(!r.passed);
    assert_eq!(r.check("boussinesq_witness").unwrap().detail.as_deref(), Some("EMPTY; closest approach reported"));
}

#[test]
fn dimension_gates_are_errors() {
    let c = ScenarioConfig::from_path(&fixtures().join("feasibility-n7.toml")).unwrap();
    let e = run_feasibility(&c).unwrap_err();
    assert!(matches!(e, Error::DimensionGate { required: 9, got: 7, .. }));
    assert!(!e.is_usage());
    let c = cfg("schema_version = 1\n[feasibility]\nsystem = \"navier_stokes_rn\"\nn = 4\nc = 1e-4\nd = 1e-4\n");
    assert!(matches!(run_feasibility(&c), Err(Error::DimensionGate { required: 5, .. })));
}

#[test]
fn navier_stokes_pair_holds_for_small_inputs() {
    let c = cfg("schema_version = 1\n[feasibility]\nsystem = \"navier_stokes_rn\"\nn = 5\nc = 1e-4\nd = 1e-4\n");
    let r = run_feasibility(&c).unwrap();
    assert!(r.passed);
    assert!(r.check("ns_rn_first").unwrap().margin.unwrap() > 1.0);
}

#[test]
fn torus_interval_from_scalars() {
    let c = cfg("schema_version = 1\n[feasibility]\nsystem = \"torus\"\nn = 3\nmax_period = 1.0\ndata_size = 0.05\n");
    let r = run_feasibility(&c).unwrap();
    let rec = r.check("torus_radius_interval").unwrap();
    assert!(rec.passed);
    let (lo, hi) = (rec.get("lo").unwrap(), rec.get("hi").unwrap());
    assert!(0.0 < lo && lo < 0.025 && 0.025 < hi);
    let c = cfg("schema_version = 1\n[feasibility]\nsystem = \"torus\"\nn = 3\nmax_period = 1.0\ndata_size = 1.0\n");
    assert!(!run_feasibility(&c).unwrap().passed);
}

#[test]
fn constants_from_expansions() {
    let c = cfg(
        "schema_version = 1\n[constants]\nn = 9\nc = 0.1\nd = 0.1\n\
         [constants.expansions.phi]\nb = 1.0\nn = 9\nterms = [[[0,0,0,0,0,0,0,0,0], 0.001]]\n",
    );
    let r = run_constants(&c).unwrap();
    let d = r.check("data_constants").unwrap();
    // a single centred Gaussian: D_0 is its peak, C_0 its integral
    assert_eq!(d.get("d_phi0"), Some(0.001));
    let want = 0.001 * std::f64::consts::PI.powf(4.5);
    assert!((d.get("c_phi0").unwrap() - want).abs() <= 1e-12 * want);
    assert_eq!(d.get("c_eta0"), Some(0.0));
}

#[test]
fn config_errors_are_usage_errors() {
    let e = ScenarioConfig::from_toml("schema_version = 1\n[constants]\nn = 9\nc = 0.1\n", &fixtures()).unwrap_err();
    assert!(e.is_usage());
    let data: String = ["c_phi0", "c_phi1", "c_eta0", "c_eta1", "c_f0", "c_g0", "d_phi0", "d_phi1", "d_eta0", "d_eta1", "d_f0", "d_g0"]
        .iter()
        .map(|k| format!("{k} = 0.0\n"))
        .collect();
    let both = cfg(&format!(
        "schema_version = 1\n[constants]\nn = 9\nc = 0.1\nd = 0.1\n[constants.data]\n{data}[constants.expansions]\n"
    ));
    assert!(run_constants(&both).unwrap_err().is_usage());
}
