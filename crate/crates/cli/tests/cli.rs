use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn pavcal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pavcal"))
        .args(args)
        .output()
        .expect("run pavcal")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn fit_separated_classes() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.csv", "-1,nontarget\n1,target\n");
    let out = pavcal(&["fit", s(&input), "--mode", "posterior"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "pavcal-map v1 posterior step\n-1\t0\n1\t1\n");
    assert!(stderr(&out).contains("T=2 T1=1 T2=1 blocks=2"));
}

#[test]
fn fit_reports_log_objective() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.csv", "0,target\n1,nontarget\n");
    let map = dir.path().join("m.txt");
    let out = pavcal(&["fit", s(&input), "--out", s(&map)]);
    assert!(out.status.success());
    let report = stdout(&out);
    let obj: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("objective[log]="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((obj - 2.0 * 2f64.ln()).abs() < 1e-12);
    assert!(report.contains("blocks=1"));
    assert_eq!(fs::read_to_string(&map).unwrap(), "pavcal-map v1 posterior step\n0\t0.5\n1\t0.5\n");
}

#[test]
fn llr_map_is_prior_independent() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.csv", "score,label\n0.3,target\n1,nontarget\n1.5,target\n-2,nontarget\n2,target\n0.9,nontarget\n");
    let a = pavcal(&["fit", s(&input), "--mode", "llr"]);
    let b = pavcal(&["fit", s(&input), "--mode", "llr", "--prior-logodds", "0"]);
    let c = pavcal(&["fit", s(&input), "--mode", "llr", "--prior-logodds", "-3.5"]);
    assert!(a.status.success() && b.status.success() && c.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn apply_constant_map() {
    let dir = TempDir::new().unwrap();
    let map = write(&dir, "m.txt", "pavcal-map v1 posterior step\n0\t0.5\n1\t0.5\n");
    let scores = write(&dir, "s.csv", "-3\n0\n7\n");
    let out = pavcal(&["apply", s(&map), s(&scores)]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "score,calibrated\n-3,0.5\n0,0.5\n7,0.5\n");
}

#[test]
fn apply_llr_map_and_clamp() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.csv", "0,target\n1,nontarget\n2,nontarget\n3,target\n");
    let map = dir.path().join("m.txt");
    assert!(pavcal(&["fit", s(&input), "--mode", "llr", "--out", s(&map)]).status.success());
    let scores = write(&dir, "s.csv", "score\n0\n1\n2\n3\n");

    let out = pavcal(&["apply", s(&map), s(&scores)]);
    let values: Vec<f64> = stdout(&out)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    for v in &values[..3] {
        assert!((v + 2f64.ln()).abs() < 1e-12);
    }
    assert_eq!(values[3], f64::INFINITY);
    assert!(stdout(&out).ends_with("3,inf\n"));

    let out = pavcal(&["apply", s(&map), s(&scores), "--clamp-llr", "10"]);
    assert!(stdout(&out).ends_with("3,10\n"));

    let out = pavcal(&["apply", s(&map), s(&scores), "--prior-logodds", "0"]);
    let text = stdout(&out);
    assert!(text.starts_with("score,calibrated,posterior\n"));
    assert!(text.ends_with("3,inf,1\n"));
}

#[test]
fn apply_rejects_prior_on_posterior_map() {
    let dir = TempDir::new().unwrap();
    let map = write(&dir, "m.txt", "pavcal-map v1 posterior step\n0\t0.5\n");
    let scores = write(&dir, "s.csv", "1\n");
    let out = pavcal(&["apply", s(&map), s(&scores), "--prior-logodds", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--prior-logodds"));
    let out = pavcal(&["apply", s(&map), s(&scores), "--clamp-llr", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_rows_name_the_line() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.csv", "score,label\n0,target\n0.5,maybe\n");
    let out = pavcal(&["fit", s(&input)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    let input = write(&dir, "nan.csv", "0,target\nnan,nontarget\n");
    let out = pavcal(&["fit", s(&input)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 2"));

    let input = write(&dir, "empty.csv", "score,label\n");
    assert_eq!(pavcal(&["fit", s(&input)]).status.code(), Some(1));
    assert_eq!(pavcal(&["fit", "/nonexistent/file.csv"]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.csv", "0,target\n1,nontarget\n");
    let out = pavcal(&["fit", s(&input), "--weights", "1,1", "--prior-logodds", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = pavcal(&["fit", s(&input), "--rule", "spherical"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("spherical"));
    let out = pavcal(&["fit", s(&input), "--mode", "llr", "--weights", "2,1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn llr_fit_needs_both_classes() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.csv", "0,target\n1,target\n");
    let out = pavcal(&["fit", s(&input), "--mode", "llr"]);
    assert_eq!(out.status.code(), Some(1));
}

fn reference_of(report: &str, rule: &str) -> f64 {
    report
        .lines()
        .find(|l| l.starts_with(&format!("rule={rule} ")))
        .and_then(|l| l.split_whitespace().find_map(|f| f.strip_prefix("reference=")))
        .unwrap()
        .parse()
        .unwrap()
}

fn calibrated_of(report: &str, rule: &str) -> f64 {
    report
        .lines()
        .find(|l| l.starts_with(&format!("rule={rule} ")))
        .and_then(|l| l.split_whitespace().find_map(|f| f.strip_prefix("calibrated=")))
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn evaluate_separated_data_has_zero_log_reference() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.csv", "0,nontarget\n1,nontarget\n2,target\n3,target\n");
    let out = pavcal(&["evaluate", s(&input), "--rule", "log", "--rule", "brier"]);
    assert!(out.status.success());
    let report = stdout(&out);
    assert_eq!(reference_of(&report, "log"), 0.0);
    assert_eq!(reference_of(&report, "brier"), 0.0);
}

#[test]
fn evaluate_monotone_calibrator_is_above_reference() {
    let dir = TempDir::new().unwrap();
    let mut body = String::from("score,label,calibrated\n");
    let labels = ["nontarget", "target", "nontarget", "nontarget", "target", "target", "nontarget", "target"];
    for (k, l) in labels.iter().enumerate() {
        let score = k as f64 - 3.5;
        // an untrained logistic map is monotone in the score
        let cal = 1.0 / (1.0 + (-0.7 * score).exp());
        body.push_str(&format!("{score},{l},{cal}\n"));
    }
    let input = write(&dir, "in.csv", &body);
    for rule in ["log", "brier", "cost@0.37", "mix(0.5@0.21,0.5@0.68)"] {
        let out = pavcal(&["evaluate", s(&input), "--calibrated", "--rule", rule]);
        assert!(out.status.success());
        let report = stdout(&out);
        assert!(calibrated_of(&report, rule) >= reference_of(&report, rule) - 1e-9, "{report}");
    }
}

#[test]
fn evaluate_llr_column() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.csv", "0,nontarget,-1\n1,target,0.5\n2,nontarget,0.7\n3,target,2\n");
    let out = pavcal(&["evaluate", s(&input), "--calibrated", "--mode", "llr", "--prior-logodds", "-1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = stdout(&out);
    assert!(calibrated_of(&report, "log") >= reference_of(&report, "log"));
}

#[test]
fn evaluate_rejects_out_of_range_posteriors() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.csv", "0,nontarget,0.1\n1,target,1.2\n");
    let out = pavcal(&["evaluate", s(&input), "--calibrated"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 2"));
}

#[test]
fn output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let body: String = (0..200)
        .map(|k| format!("{},{}\n", (k * 37 % 101) as f64 / 13.0, if k % 3 == 0 { "target" } else { "nontarget" }))
        .collect();
    let input = write(&dir, "in.csv", &body);
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    assert!(pavcal(&["fit", s(&input), "--policy", "linear", "--out", s(&a)]).status.success());
    assert!(pavcal(&["fit", s(&input), "--policy", "linear", "--out", s(&b)]).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn selfcheck_single_weight_pair() {
    let out = pavcal(&["selfcheck", "--max-len", "10", "--weights", "2.5,0.7", "--instances", "20", "--candidates", "100"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("PASS oracle-equivalence"));
    assert_eq!(pavcal(&["selfcheck", "--max-len", "40"]).status.code(), Some(2));
}
