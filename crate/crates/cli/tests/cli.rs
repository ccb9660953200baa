use std::path::PathBuf;
use std::process::{Command, Output};

use picard_core::scenario::{parse_csv_series, RunReport};
use picard_core::Verdict;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn picard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_picard"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("spawn picard")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn report(o: &Output) -> RunReport {
    RunReport::from_json(std::str::from_utf8(&o.stdout).unwrap()).unwrap()
}

fn config(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn empty_suite_selection_is_an_empty_passing_report() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(&dir, "v.toml", "schema_version = 1\n[verify]\nsuites = []\n");
    let o = picard(&["verify-lemmas", "--config", &c]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert!(r.passed && r.checks.is_empty());
    assert_eq!(r.command, "verify-lemmas");
}

#[test]
fn corrupted_double_factorial_fails_the_moment_check() {
    let o = picard(&["verify-lemmas", "--config", fixture("verify-fault.toml").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let r = report(&o);
    assert!(!r.check("gaussian_moment_closed_forms").unwrap().passed);
}

#[test]
fn default_suites_report_the_factorial_ratio_counterexample() {
    let o = picard(&["verify-lemmas", "--config", fixture("verify-default.toml").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let r = report(&o);
    let failed: Vec<_> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    assert_eq!(failed, ["lemma33_factorial_ratio"]);
    assert_eq!(r.check("lemma33_factorial_ratio").unwrap().get("violations"), Some(68.0));
}

#[test]
fn verify_reports_are_deterministic_for_a_seed() {
    let c = fixture("verify-default.toml");
    let run = |seed: &str| {
        let mut r = report(&picard(&["verify-lemmas", "--config", c.to_str().unwrap(), "--seed", seed]));
        r.wall_clock_seconds = 0.0;
        r
    };
    let a = run("11");
    assert_eq!(a, run("11"));
    assert_eq!(a.seed, 11);
}

#[test]
fn small_swirl_converges_with_condition_margin_above_one() {
    let o = picard(&["solve", "--config", fixture("solve-small-swirl.toml").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_eq!(r.verdict, Some(Verdict::Converged));
    assert!(r.series.last().unwrap().residual_norm < 1e-8);
    assert!(r.check("smallness_condition").unwrap().margin.unwrap() > 1.0);
    let out = r.outputs.expect("fields embedded");
    assert_eq!(out.u.components.len(), 3);
}

#[test]
fn zero_data_converges_at_iteration_zero() {
    let o = picard(&["solve", "--problem", fixture("zero-data.json").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let r = report(&o);
    assert_eq!(r.verdict, Some(Verdict::Converged));
    assert_eq!(r.series.len(), 1);
    assert_eq!(r.series[0].iteration, 0);
}

#[test]
fn condition_violating_problem_reports_margin_below_one() {
    let o = picard(&["solve", "--config", fixture("solve-condition-violating.toml").to_str().unwrap()]);
    let r = report(&o);
    let c = r.check("smallness_condition").unwrap();
    assert!(c.margin.unwrap() < 1.0);
    assert_eq!(c.get("holds"), Some(0.0));
    assert!(r.warnings.iter().any(|w| w.contains("smallness condition fails")));
    assert_eq!(code(&o), if r.verdict == Some(Verdict::Converged) { 0 } else { 1 });
}

#[test]
fn csv_export_matches_the_report_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("out/report.json");
    let o = picard(&[
        "solve",
        "--config",
        fixture("solve-small-swirl.toml").to_str().unwrap(),
        "--out",
        rep.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let r = RunReport::from_json(&std::fs::read_to_string(&rep).unwrap()).unwrap();

    let e = picard(&["export", "--report", rep.to_str().unwrap(), "--series", "residuals"]);
    assert_eq!(code(&e), 0);
    let (col, rows) = parse_csv_series(std::str::from_utf8(&e.stdout).unwrap()).unwrap();
    assert_eq!(col, "residual_norm");
    assert_eq!(rows.len(), r.series.len());
    for (row, rec) in rows.iter().zip(&r.series) {
        assert_eq!(row.0, rec.iteration);
        assert_eq!(row.1.to_bits(), rec.residual_norm.to_bits());
    }

    let j = picard(&["export", "--report", rep.to_str().unwrap(), "--series", "margins", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_slice(&j.stdout).unwrap();
    assert_eq!(doc["column"], "condition_margin");
    assert_eq!(doc["rows"].as_array().unwrap().len(), r.series.len());
}

#[test]
fn solve_can_stream_csv() {
    let o = picard(&[
        "solve",
        "--config",
        fixture("solve-small-swirl.toml").to_str().unwrap(),
        "--format",
        "csv",
        "--series",
        "update_norms",
        "--max-iter",
        "2",
    ]);
    // two iterations are not enough to reach 1e-10
    assert_eq!(code(&o), 1);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("iteration,update_norm\n"));
    assert_eq!(text.lines().count(), 1 + 3);
}

#[test]
fn feasibility_commands() {
    let o = picard(&["feasibility", "--config", fixture("feasibility-zero-data.toml").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(report(&o).check("boussinesq_witness").unwrap().passed);

    let o = picard(&["feasibility", "--config", fixture("feasibility-n7.toml").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("n >= 9"));

    let o = picard(&["feasibility", "--config", fixture("feasibility-torus.toml").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let c = report(&o).check("torus_radius_interval").unwrap().clone();
    let kp = c.get("kappa_prime").unwrap();
    assert_eq!(c.get("lo"), Some(0.0));
    assert!((c.get("hi").unwrap() - 1.0 / (4.0 * kp)).abs() < 1e-15);
}

#[test]
fn constants_command_reports_the_inequalities() {
    let o = picard(&["constants", "--config", fixture("constants.toml").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let r = report(&o);
    let c = r.check("existence_inequalities").unwrap();
    for key in ["M0", "M1", "M_prime", "M", "N1", "N2", "N"] {
        assert!(c.get(key).unwrap().is_finite(), "{key}");
    }
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let typo = config(&dir, "t.toml", "schema_version = 1\n[solve]\nproblem = \"x.json\"\nmaxiter = 3\n");
    let missing = config(&dir, "m.toml", "schema_version = 1\n[solve]\nproblem = \"nope.json\"\n");
    let swirl = fixture("solve-small-swirl.toml");
    let swirl = swirl.to_str().unwrap();
    for args in [
        vec!["solve", "--bogus"],
        vec!["solve", "--config", &typo],
        vec!["solve", "--config", &missing],
        vec!["solve", "--config", swirl, "--time-grid", "1"],
        vec!["solve", "--config", swirl, "--tol", "-1"],
        vec!["solve", "--config", swirl, "--series", "pressure", "--format", "csv"],
        vec!["verify-lemmas", "--config", "/no/such/config.toml"],
        vec!["constants"],
        vec!["export", "--report", "/no/such/report.json"],
    ] {
        let o = picard(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}
