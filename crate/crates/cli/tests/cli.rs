use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_balanced3body")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let out = run(&all);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-300)
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["families", "--masses", "1,0,1"][..],
        &["families", "--masses", "1,2"],
        &["families", "--masses", "3,2,1", "--samples", "15"],
        &["isosceles", "--mu", "-1"],
        &["simulate", "--masses", "1,1,1"],
        &["simulate", "--mu", "1", "--rho", "0.8", "--perturb", "0.5"],
        &["bogus"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn unwritable_output_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("out.csv");
    let out = run(&["isosceles", "--mu", "1", "-o", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_has_header_and_round_trip_digits() {
    let out = run(&["isosceles", "--mu", "0.5", "--samples", "16"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("rho,chi,h,k"));
    let first = lines.next().unwrap();
    for field in first.split(',') {
        let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{field}");
    }
    assert!(!text.contains('\r'));
}

#[test]
fn json_document_carries_metadata() {
    let doc = json(&["isosceles", "--mu", "0.5", "--samples", "16"]);
    let meta = &doc["metadata"];
    assert_eq!(meta["command"], "isosceles");
    assert_eq!(meta["normalize"], "sum1");
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    let m: Vec<f64> = meta["masses"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(close(m.iter().sum(), 1.0, 1e-15));
    assert!(close(m[2] / m[0], 0.5, 1e-15));
    let records = doc["records"].as_array().unwrap();
    assert!(records.len() >= 16);
    for r in records {
        let k = r["k"].as_f64().unwrap();
        assert!((0.0..=0.25).contains(&k));
    }
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let paths = [dir.path().join("a.json"), dir.path().join("b.json")];
    for (p, extra) in paths.iter().zip([&[][..], &["--sequential"]]) {
        let mut args = vec!["simulate", "--mu", "1", "--rho", "0.8", "--perturb", "1e-4", "--time", "5", "--samples", "20"];
        args.extend(extra);
        args.extend(["--format", "json", "-o", p.to_str().unwrap()]);
        assert_eq!(run(&args).status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());

    let a = run(&["families", "--masses", "3,2,1", "--samples", "16", "--decades", "4"]);
    let b = run(&["families", "--masses", "3,2,1", "--samples", "16", "--decades", "4", "--sequential"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn equal_masses_give_the_isosceles_family() {
    let doc = json(&["families", "--masses", "1,1,1", "--samples", "16", "--decades", "3"]);
    let records = doc["records"].as_array().unwrap();
    assert!(!records.is_empty());
    for r in records {
        assert_eq!(r["analytic"], true);
        let s: Vec<f64> = ["a", "b", "c"].iter().map(|k| r[*k].as_f64().unwrap()).collect();
        assert!(close(s[0], s[1], 1e-12) || close(s[0], s[2], 1e-12) || close(s[1], s[2], 1e-12), "{s:?}");
    }
}

#[test]
fn equilateral_energy_for_equal_masses() {
    let doc = json(&["equilateral", "--masses", "1,1,1", "--samples", "16"]);
    let m: f64 = 1.0 / 3.0;
    let h_l = -4.5 * m.powi(5);
    assert!(close(doc["h_l"].as_f64().unwrap(), h_l, 1e-14));
    for r in doc["records"].as_array().unwrap() {
        assert!(close(r["h"].as_f64().unwrap(), h_l, 1e-12));
        let k = r["k"].as_f64().unwrap();
        assert!((-1e-15..=0.25 + 1e-15).contains(&k));
    }
}

#[test]
fn perturbed_isosceles_stays_close() {
    let doc = json(&["simulate", "--mu", "1", "--rho", "0.8", "--perturb", "1e-4", "--time", "20", "--samples", "50"]);
    let rep = &doc["report"];
    assert_eq!(rep["completed"], true);
    assert!(rep["energy_drift"].as_f64().unwrap() < 1e-8);
    assert!(rep["max_shape_deviation"].as_f64().unwrap() < 1e-2);
    assert!(rep["min_area2"].as_f64().unwrap() > 0.0);
}

#[test]
fn equilateral_seed_is_stationary_in_shape() {
    let doc = json(&["simulate", "--shape", "1,1,1", "--masses", "1,1,1", "--perturb", "0", "--time", "20", "--samples", "50"]);
    let rep = &doc["report"];
    assert_eq!(rep["completed"], true);
    assert!(rep["max_shape_deviation"].as_f64().unwrap() < 1e-8);
}

#[test]
fn collinear_seed_stays_in_a_plane() {
    let doc = json(&["simulate", "--rank2", "--masses", "1,1,1", "--time", "10", "--samples", "20"]);
    let rep = &doc["report"];
    assert_eq!(rep["seed"]["rank"], 2);
    assert!(rep["min_wedge"].as_f64().unwrap().abs() < 1e-10);
}

#[test]
fn drift_over_budget_exits_one() {
    let out = run(&["simulate", "--mu", "1", "--rho", "0.8", "--time", "5", "--samples", "10", "--tol", "1e-6", "--budget", "1e-300"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn quick_verification_passes() {
    let out = run(&["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with("group,status,detail\n"));
    assert!(text.lines().skip(1).all(|l| l.contains(",pass,")));
}
