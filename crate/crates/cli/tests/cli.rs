use std::path::Path;
use std::process::{Command, Output};

fn gwtree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gwtree"))
        .args(args)
        .env_remove("GWTREE_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn params_reports_extinction_probability() {
    let v = json(&gwtree(&["params", "--c", "2"]));
    let q = v["results"][0]["q"].as_f64().unwrap();
    assert!((q - 0.20319).abs() < 1e-5);
    assert_eq!(v["config"]["c"], "2");
    assert!(v["version"].as_str().unwrap().starts_with("gwtree "));
}

#[test]
fn domination_at_alpha_has_no_violation() {
    let v = json(&gwtree(&["verify-domination", "--lambda", "1", "--mu", "2"]));
    assert!(v["results"][0]["violated_at"].is_null());
    let v = json(&gwtree(&["verify-domination", "--lambda", "1", "--mu", "2", "--beta", "0.6202145069582776"]));
    assert_eq!(v["results"][0]["violated_at"], 1);
}

#[test]
fn invalid_config_fails_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = gwtree(&["returns", "--c", "2", "--k", "21", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`k`"));
    assert!(!out.exists());
    let o = gwtree(&["bounds", "--c", "2,0.9"]);
    assert_eq!(o.status.code(), Some(2));
    let o = gwtree(&["bounds", "--c", "2", "--seed", "1"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not used by `bounds`"));
    let o = gwtree(&["params", "--c", "2", "--out", dir.path().join("missing/x.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# bounds grid\nc = 2, 3\nkmax = 50\nformat = csv\n").unwrap();
    let o = gwtree(&["bounds", "--config", cfg.to_str().unwrap(), "--kmax", "80"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("# kmax=80\n"));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "c,f_lower,f_upper,fprime_lower");
    assert_eq!(rows.len(), 3);
    std::fs::write(&cfg, "c = 2\nwhatever = 1\n").unwrap();
    assert_eq!(gwtree(&["bounds", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

fn run_to(dir: &Path, name: &str, args: &[&str], threads: &str) -> Vec<u8> {
    let out = dir.join(name);
    let mut a = vec!["--threads", threads];
    a.extend_from_slice(args);
    a.extend_from_slice(&["--out", out.to_str().unwrap()]);
    let o = gwtree(&a);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::read(out).unwrap()
}

#[test]
fn outputs_are_byte_identical() {
    // Same file name in two directories; the path is part of the embedded config.
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["returns", "--c", "2,3", "--k", "20", "--samples", "300", "--seed", "5"];
    let a = run_to(d1.path(), "r.json", &args, "1");
    let b = run_to(d2.path(), "r.json", &args, "3");
    assert_ne!(d1.path(), d2.path());
    let strip = |v: Vec<u8>, d: &Path| String::from_utf8(v).unwrap().replace(d.to_str().unwrap(), "");
    assert_eq!(strip(a, d1.path()), strip(b, d2.path()));
    let args = ["empirical-f", "--c", "3", "--n", "200", "--reps", "3", "--format", "csv"];
    let a = run_to(d1.path(), "e.csv", &args, "1");
    let b = run_to(d2.path(), "e.csv", &args, "2");
    assert_eq!(strip(a, d1.path()), strip(b, d2.path()));
    let a = gwtree(&["estimate-f", "--c", "2", "--k", "20", "--samples", "100"]);
    let b = gwtree(&["--threads", "2", "estimate-f", "--c", "2", "--k", "20", "--samples", "100"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn estimator_commands_run() {
    let v = json(&gwtree(&["estimate-f", "--c", "2", "--k", "20", "--samples", "200"]));
    let f = v["results"][0]["value"].as_f64().unwrap();
    assert!(f > 0.0 && f < 0.75);
    assert!(v["results"][0].get("wall_time").is_none());
    let v = json(&gwtree(&["decay", "--c", "2", "--k", "20", "--samples", "200"]));
    assert_eq!(v["results"][0]["rows"].as_array().unwrap().len(), 20);
    let v = json(&gwtree(&[
        "crosscheck", "--c", "3", "--k", "20", "--samples", "200", "--n", "200", "--reps", "2",
    ]));
    let r = &v["results"][0];
    let d = r["spanning_f"].as_f64().unwrap() - r["walk_f"].as_f64().unwrap();
    assert_eq!(r["discrepancy"].as_f64().unwrap(), d);
    let v = json(&gwtree(&["couple", "--lambda", "1.2", "--mu", "1.5", "--samples", "20", "--depth", "4"]));
    assert_eq!(v["results"]["all_sound"], true);
}

#[test]
fn thread_variable_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_gwtree"))
        .args(["params", "--c", "2"])
        .env("GWTREE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
