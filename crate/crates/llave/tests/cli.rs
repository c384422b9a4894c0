use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use llave::schema::*;
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn llave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_llave")).args(args).output().unwrap()
}

fn run_on(cmd: &str, input: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--input", input.to_str().unwrap()];
    args.extend_from_slice(extra);
    llave(&args)
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_record(o: &Output) -> Value {
    let err = String::from_utf8_lossy(&o.stderr);
    serde_json::from_str(err.lines().last().unwrap()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("llave-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn expansion_csv_has_one_row_per_n() {
    let o = run_on("expansion", &data("model_single_monomial.json"), &["--n-min", "10", "--n-max", "40"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,T_n,omega_hat_n,residual");
    assert_eq!(lines.len(), 32);
    assert!(lines[1].starts_with("10,"));
    assert!(lines[31].starts_with("40,"));
    let summary = String::from_utf8_lossy(&o.stderr);
    let gap: f64 = summary.split_whitespace().skip_while(|w| *w != "relative_gap").nth(1).unwrap().parse().unwrap();
    assert!(gap < 1e-3, "{summary}");
}

#[test]
fn cohomology_report_follows_coefficient_law() {
    let text = stdout(&run_on("cohomology", &data("single_mode.json"), &[]));
    let r: CohomologyReport = parse(&text).unwrap();
    let mu = (3.0 - 5f64.sqrt()) / 2.0;
    let c = r.orbit_coefficients.iter().find(|c| c.n == 3).unwrap();
    // (A^T)^3 (1, 0)
    assert_eq!(c.k, [41, 15]);
    assert!((c.cos_u + mu.powi(4)).abs() < 1e-12);
    assert!(c.cos_s.abs() < 1e-12);
    assert!(r.residual_sup < 1e-9);
}

#[test]
fn non_hyperbolic_matrix_is_a_validation_error() {
    let o = run_on("eigen", &data("not_hyperbolic.json"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let rec = error_record(&o);
    assert_eq!(rec["error"], "NotHyperbolic");
    assert_eq!(rec["class"], "validation");
    assert_eq!(rec["schema_version"], 1);
    assert!(o.stdout.is_empty());
}

#[test]
fn inapplicable_option_is_rejected() {
    let o = run_on("eigen", &data("matrices.json"), &["--depth", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(error_record(&o)["message"].as_str().unwrap().contains("--depth"));
    let o = run_on("periodic", &data("perturbed.json"), &["--format", "csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_flag_and_missing_file_exit_2() {
    assert_eq!(run_on("eigen", &data("matrices.json"), &["--bogus", "1"]).status.code(), Some(2));
    let o = run_on("eigen", &data("no_such_file.json"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_record(&o)["error"], "Io");
}

#[test]
fn divergent_series_is_a_numerical_error() {
    let mut doc: LocalModelDoc = parse(&fs::read_to_string(data("model_trivial.json")).unwrap()).unwrap();
    doc.eig = [0.3, 0.45, 2.1, 5.3];
    let path = scratch("contracting.json");
    fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    let o = run_on("expansion", &path, &["--n-min", "10", "--n-max", "20"]);
    assert_eq!(o.status.code(), Some(3));
    let rec = error_record(&o);
    assert_eq!(rec["error"], "DivergentSeries");
    assert_eq!(rec["class"], "numerical");
}

#[test]
fn output_file_matches_stdout() {
    let path = scratch("eigen.json");
    let to_file = run_on("eigen", &data("matrices.json"), &["--output", path.to_str().unwrap()]);
    assert!(to_file.status.success());
    assert!(to_file.stdout.is_empty());
    let direct = stdout(&run_on("eigen", &data("matrices.json"), &[]));
    assert_eq!(fs::read_to_string(&path).unwrap(), direct);
}

#[test]
fn json_reports_parse_back() {
    let text = stdout(&run_on("expansion", &data("model_coupled.json"), &["--format", "json", "--n-max", "30"]));
    let r: ExpansionReportDoc = parse(&text).unwrap();
    assert_eq!(r.rows.len(), 16);
    assert!(r.relative_gap < 1e-3);
    assert_eq!(llave::report::json(&r), text);

    let text = stdout(&run_on("eigen", &data("matrices.json"), &[]));
    let r: EigenReport = parse(&text).unwrap();
    assert!((r.quadruple[1] - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-15);
}

#[test]
fn extended_precision_matches_double() {
    let model = data("model_single_monomial.json");
    let a = stdout(&run_on("expansion", &model, &["--format", "json", "--n-max", "35"]));
    let b = stdout(&run_on("expansion", &model, &["--format", "json", "--n-max", "35", "--precision", "extended"]));
    let a: ExpansionReportDoc = parse(&a).unwrap();
    let b: ExpansionReportDoc = parse(&b).unwrap();
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert!((x.t_n - y.t_n).abs() < 1e-13, "n={}", x.n);
    }
}

#[test]
fn bundled_models_round_trip() {
    for name in ["model_single_monomial.json", "model_trivial.json", "model_coupled.json"] {
        let mut doc: LocalModelDoc = parse(&fs::read_to_string(data(name)).unwrap()).unwrap();
        let back = LocalModelDoc::from_core(&doc.to_core().unwrap());
        doc.schema_version = None;
        assert_eq!(back, doc, "{name}");
    }
}

#[test]
fn periodic_census_is_exact() {
    let text = stdout(&run_on("periodic", &data("perturbed.json"), &["--max-period", "2"]));
    let r: PeriodicReport = parse(&text).unwrap();
    for c in &r.census {
        assert_eq!(c.found, c.expected, "period {}", c.period);
        assert!(c.max_residual < 1e-12);
    }
    assert_eq!(r.orbits.len(), 2 + 60);
}
