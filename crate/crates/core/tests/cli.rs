use std::path::PathBuf;

use sysfold::cli::{run, Outcome};
use sysfold::expr::parse_expr;

fn spec(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("specs")
        .join(format!("{name}.spec"))
        .to_string_lossy()
        .into_owned()
}

fn sysfold(args: &[&str]) -> Outcome {
    run(std::iter::once("sysfold").chain(args.iter().copied()))
}

fn field<'a>(out: &'a str, key: &str) -> Vec<&'a str> {
    let prefix = format!("{key}: ");
    out.lines().filter_map(|l| l.strip_prefix(prefix.as_str())).collect()
}

#[test]
fn fold_bs1_prints_equation_and_passive_recovery() {
    let out = sysfold(&["fold", &spec("bs1")]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let eq = field(&out.stdout, "equation")[0];
    let (lhs, rhs) = eq.split_once(" = ").unwrap();
    assert_eq!(lhs, "s[n+2]");
    assert_eq!(parse_expr(rhs).unwrap(), parse_expr("s[n]*(a + b*s[n])").unwrap());
    assert_eq!(field(&out.stdout, "passive"), ["y = s[n+1]/s[n]"]);
    assert_eq!(field(&out.stdout, "side_condition"), ["s[n] != 0"]);
}

#[test]
fn fold_json_is_machine_readable() {
    let out = sysfold(&["fold", &spec("i3es"), "--json"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["kappa"], 3);
    assert_eq!(v["pivot"], "x1");
}

#[test]
fn fold_writes_report_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bs1.txt");
    let out = sysfold(&["fold", &spec("bs1"), "--out", path.to_str().unwrap()]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let written = std::fs::read_to_string(&path).unwrap();
    assert!(written.starts_with("equation: s[n+2] = "), "{written}");
}

#[test]
fn uncoupled_and_block_systems_are_not_foldable() {
    let out = sysfold(&["fold", &spec("uncoupled")]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("interdependence degree 0"), "{}", out.stderr);
    let out = sysfold(&["fold", &spec("blocks")]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("undefined"), "{}", out.stderr);
}

#[test]
fn malformed_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.spec");
    std::fs::write(&path, "kind: difference\nvars: x\neq x = (x +\n").unwrap();
    let out = sysfold(&["fold", path.to_str().unwrap()]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("line 3"), "{}", out.stderr);
    assert_eq!(sysfold(&["fold", "/nonexistent.spec"]).code, 1);
}

#[test]
fn verify_bs1_exactly_with_bound_parameters() {
    let out = sysfold(&["verify", &spec("bs1"), "--param", "a=3/2", "--param", "b=-1", "--trials", "20"]);
    assert_eq!(out.code, 0, "{}{}", out.stdout, out.stderr);
    assert_eq!(field(&out.stdout, "status"), ["pass"]);
    assert_eq!(field(&out.stdout, "max_abs_dev"), ["0e0"]);
}

#[test]
fn verify_without_parameters_is_an_input_error() {
    let out = sysfold(&["verify", &spec("bs1")]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("--param"), "{}", out.stderr);
}

#[test]
fn verify_reports_equation_only_solution() {
    let out = sysfold(&[
        "verify", &spec("bs1"), "--param", "a=1", "--param", "b=1", "--init", "-1,3/2", "--steps", "10", "--json",
    ]);
    assert_eq!(out.code, 4, "{}", out.stderr);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["status"], "degenerate");
    assert_eq!(v["singular_events"][0]["kind"], "equation-only solution");
}

#[test]
fn verify_is_deterministic_for_a_seed() {
    let args = ["verify", &spec("linear"), "--mode", "float", "--seed", "11", "--trials", "5"];
    let a = sysfold(&args);
    let b = sysfold(&args);
    assert_eq!(a, b);
    assert_eq!(a.code, 0);
}

#[test]
fn verify_ode_from_initial_state() {
    let out = sysfold(&["verify", &spec("volterra"), "--init", "1,2", "--tol", "1e-5"]);
    assert_eq!(out.code, 0, "{}{}", out.stdout, out.stderr);
    assert_eq!(field(&out.stdout, "singular_events"), ["0"]);
}

#[test]
fn eigseq_golden_example() {
    let out = sysfold(&["eigseq", "--A", "-1,-1,2", "--B", "1,1,1", "--steps", "6"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(field(&out.stdout, "alpha"), ["0, 1, -1, 2, 3"]);
    assert_eq!(field(&out.stdout, "beta"), ["1, 0, 1, -1, -1"]);
    assert_eq!(field(&out.stdout, "quadratic"), ["2r^2 - 4r + 1 = 0"]);
    let rho: f64 = field(&out.stdout, "rho")[0].parse().unwrap();
    assert!((rho - (1.0 + 2f64.sqrt())).abs() < 1e-12);
    assert_eq!(field(&out.stdout, "behavior"), ["special solution, decays"]);
}

#[test]
fn eigseq_complex_roots_exit_three() {
    let out = sysfold(&["eigseq", "--A", "1", "--B", "-1"]);
    assert_eq!(out.code, 3);
    assert!(out.stderr.contains("complex"), "{}", out.stderr);
}

#[test]
fn unfold_emits_a_spec_that_folds_back() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("round.spec");
    let out = sysfold(&["unfold", "--f", "u*v", "--phi", "u*(a + b*u)", "--out", path.to_str().unwrap()]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("eq y = "), "{text}");

    let out = sysfold(&["fold", path.to_str().unwrap()]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let eq = field(&out.stdout, "equation")[0];
    let rhs = eq.split_once(" = ").unwrap().1;
    assert_eq!(parse_expr(rhs).unwrap(), parse_expr("s[n]*(a + b*s[n])").unwrap());
}

#[test]
fn unfold_rejects_non_isolable_component() {
    let out = sysfold(&["unfold", "--f", "u + v^2", "--phi", "u"]);
    assert_eq!(out.code, 2, "{}", out.stderr);
}

#[test]
fn unfold_duffing() {
    let out = sysfold(&["unfold", "--kind", "ode", "--f", "-b*u + v", "--phi", "A*sin(omega*t) - k*u^3 - b*w"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let g = out.stdout.lines().find_map(|l| l.strip_prefix("# g = ")).unwrap();
    assert_eq!(parse_expr(g).unwrap(), parse_expr("A*sin(omega*t) - k*u^3").unwrap());
}

#[test]
fn degree_reports_kappa() {
    let out = sysfold(&["degree", &spec("i3es_degenerate")]);
    assert_eq!(out.stdout.trim(), "interdependence degree 2");
    let out = sysfold(&["degree", &spec("uncoupled")]);
    assert_eq!(out.stdout.trim(), "interdependence degree 0");
}

#[test]
fn simulate_prints_csv() {
    let out = sysfold(&["simulate", &spec("linear"), "--init", "1,2", "--steps", "3"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert_eq!(lines[0], "step,x,y");
    assert_eq!(lines.len(), 5);
}
