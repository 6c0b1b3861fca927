use std::path::Path;
use std::process::{Command, Output};

fn kslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kslab")).args(args).output().expect("binary runs")
}

fn config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn passing_run_writes_bundle_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "c.toml", "space = \"interval:201\"\nseed = 1\n");
    let out = tmp.path().join("b");
    let o = kslab(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], true);
    assert!(summary["checks"].as_array().unwrap().len() >= 20);
    assert!(out.join("energy_sweep_x.csv").exists());

    let r = kslab(&["report", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&r.stdout).contains("overall: pass"));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "c.toml", "space = \"carpet:3\"\nseed = 11\n");
    let mut bodies = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        kslab(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
        bodies.push(std::fs::read(out.join("summary.json")).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn failing_check_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    // too coarse to calibrate within 5%
    let cfg = config(tmp.path(), "c.toml", "space = \"square:21\"\nseed = 1\nsuite = \"energy\"\n");
    let o = kslab(&["check", "--config", &cfg, "--suite", "energy"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn invalid_configs_exit_two_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("never");
    for (i, body) in [
        "space = \"interval:101\"\n",
        "space = \"interval:101\"\nseed = 1\nbogus = 3\n",
        "space = \"moon:4\"\nseed = 1\n",
        "space = \"interval:101\"\nseed = 1\nd_w = 1.2\n",
        "space = \"interval:101\"\nseed = 1\n[grid]\nratio = 2.0\n",
        "space = \"interval:101\nseed = 1\n",
    ]
    .iter()
    .enumerate()
    {
        let cfg = config(tmp.path(), &format!("c{i}.toml"), body);
        let o = kslab(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "config {i}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!out.exists());
    }
}

#[test]
fn seed_flag_fills_missing_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "c.toml", "space = \"interval:101\"\n");
    let o = kslab(&["space", "--config", &cfg, "--seed", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let info: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(info["points"], 101);
}

#[test]
fn report_on_empty_dir_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let o = kslab(&["report", tmp.path().to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    assert!(!o.stderr.is_empty());
}

#[test]
fn sweep_prints_csv_per_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "c.toml", "space = \"interval:101\"\nseed = 2\nd_w = 2.0\n");
    let o = kslab(&["sweep", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.matches("# field").count(), 3);
}

#[test]
fn doubling_suite_on_fine_interval() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "c.toml", "space = \"interval_grid:2001\"\nseed = 5\nsuite = \"doubling\"\n");
    let out = tmp.path().join("b");
    let o = kslab(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let c = s["checks"].as_array().unwrap().iter().find(|c| c["name"] == "volume_doubling").unwrap();
    assert!(c["constant"].as_f64().unwrap() <= 2.1);
}

#[test]
fn gasket_bundle_records_both_walk_dimensions_and_every_check() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "c.toml", "space = \"gasket:5\"\nseed = 5\nd_w = \"fit\"\n");
    let out = tmp.path().join("b");
    kslab(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let text = std::fs::read_to_string(out.join("summary.json")).unwrap();
    let s: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!((s["d_w"]["eigen_ratio"].as_f64().unwrap() - 2.32).abs() < 0.01);
    assert!(s["d_w"]["ks_scaling"].as_f64().is_some());
    assert!(s["d_w"]["agree"].is_boolean());

    let checks = s["checks"].as_array().unwrap();
    let r = kslab(&["report", out.to_str().unwrap()]);
    let table = String::from_utf8_lossy(&r.stdout);
    for c in checks {
        assert!(table.contains(c["name"].as_str().unwrap()));
    }
    // header, column titles, one row per check, overall line
    assert_eq!(table.lines().count(), checks.len() + 3);

    // a bundle cut down to one check reports one row
    let mut one = s.clone();
    one["checks"] = serde_json::Value::Array(vec![checks[0].clone()]);
    let single = tmp.path().join("single");
    std::fs::create_dir(&single).unwrap();
    std::fs::write(single.join("summary.json"), one.to_string()).unwrap();
    let r = kslab(&["report", single.to_str().unwrap()]);
    assert_eq!(String::from_utf8_lossy(&r.stdout).lines().count(), 4);
}
