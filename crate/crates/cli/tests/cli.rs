use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn capcover(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capcover"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json_file(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn caps_quarter_circle() {
    let o = capcover(&["caps", "--dim", "2", "--mass", "0.25", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let r = &stdout_json(&o)[0]["result"];
    assert!((f(&r["geodesicRadius"]) - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
}

#[test]
fn caps_hemisphere() {
    let o = capcover(&["caps", "-d", "10", "--mass", "0.5", "--format", "json"]);
    let r = &stdout_json(&o)[0]["result"];
    assert!((f(&r["geodesicRadius"]) - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    assert_eq!(f(&r["cosThreshold"]), 0.0);
}

#[test]
fn caps_roundtrip_and_offset() {
    let o = capcover(&["caps", "-d", "10", "--mass", "0.001", "--format", "json"]);
    let r = &stdout_json(&o)[0]["result"];
    assert!(f(&r["roundtripRelError"]) < 1e-12);
    // Q(3.090232306167813) = 0.001
    assert!((f(&r["gaussianOffset"]) - 3.090_232_306_167_813).abs() < 1e-12);
    assert!(f(&r["etaBound"]) >= f(&r["gaussianOffset"]));
}

#[test]
fn caps_needs_exactly_one_of_mass_and_radius() {
    assert_eq!(code(&capcover(&["caps", "-d", "4"])), 2);
    assert_eq!(code(&capcover(&["caps", "-d", "4", "--mass", "0.1", "--radius", "0.3"])), 2);
    assert_eq!(code(&capcover(&["caps", "-d", "4", "--mass", "1.5"])), 2);
    assert_eq!(code(&capcover(&["caps", "-d", "1", "--mass", "0.1"])), 2);
}

#[test]
fn simulate_matches_closed_form() {
    let o = capcover(&["simulate", "-d", "10", "-n", "1000", "-a", "1", "--seed", "4", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let r = &stdout_json(&o)[0]["result"];
    assert!((f(&r["expected"]) - 0.632_304_575_229_036).abs() < 1e-12);
    assert!(f(&r["z"]).abs() <= 4.0, "{r}");
}

#[test]
fn simulate_single_full_cap_is_exact() {
    let o = capcover(&["simulate", "-d", "6", "-n", "1", "-a", "1", "--configs", "3", "--samples", "1000", "--format", "json"]);
    let r = &stdout_json(&o)[0]["result"];
    assert_eq!(f(&r["mean"]), 1.0);
    assert_eq!(f(&r["stdError"]), 0.0);
}

#[test]
fn simulate_is_deterministic_and_thread_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let p = dir.path().join(name);
        let o = capcover(&[
            "simulate", "-d", "3,7", "-n", "50", "-a", "0.5,1", "--configs", "4", "--samples", "3000",
            "--chunk-size", "500", "--seed", "17", "--omit-timing", "--threads", threads, "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(p).unwrap()
    };
    let a = run("a.csv", "1");
    assert_eq!(a, run("b.csv", "1"));
    assert_eq!(a, run("c.csv", "3"));
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("tool,version,command,seed,d,n,alpha,"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn embedded_record_reproduces_its_row() {
    let dir = tempfile::tempdir().unwrap();
    let all = dir.path().join("all.json");
    let o = capcover(&[
        "simulate", "-d", "4,5", "-n", "20", "-a", "0.7", "--configs", "3", "--samples", "2000",
        "--seed", "5", "--format", "json", "--out", all.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let records = json_file(&all);
    let second = dir.path().join("second.json");
    fs::write(&second, records[1].to_string()).unwrap();
    let again = dir.path().join("again.json");
    let o = capcover(&[
        "simulate", "--config", second.to_str().unwrap(), "--format", "json", "--out", again.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(json_file(&again)[0]["result"], records[1]["result"]);
}

#[test]
fn config_file_overrides_flags_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"dims": [2], "mass": 0.25}"#).unwrap();
    let o = capcover(&["caps", "--config", cfg.to_str().unwrap(), "-d", "7", "--format", "json"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert_eq!(stdout_json(&o)[0]["result"]["d"], 2);
    fs::write(&cfg, r#"{"dimensions": [2]}"#).unwrap();
    assert_eq!(code(&capcover(&["caps", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn simulate_rejects_bad_grids() {
    assert_eq!(code(&capcover(&["simulate", "-a", "1.5"])), 2);
    assert_eq!(code(&capcover(&["simulate", "-d", "1"])), 2);
    assert_eq!(code(&capcover(&["simulate", "-n", "0"])), 2);
    assert_eq!(code(&capcover(&["simulate", "--format", "table"])), 2);
}

#[test]
fn bounds_rows() {
    let o = capcover(&["bounds", "-d", "4,5,10,100,1000", "-n", "1000000", "-a", "1", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let rows: Vec<Value> = stdout_json(&o).as_array().unwrap().iter().map(|r| r["result"].clone()).collect();
    assert!(rows[0]["note"].as_str().unwrap().contains("precondition unmet"));
    for r in &rows {
        if r["preconditionMet"].as_bool().unwrap() {
            assert!(f(&r["lower"]) <= f(&r["upper"]));
        }
        assert!((f(&r["ldivUpper"]) - 0.11336).abs() < 5e-6);
        assert_eq!(f(&r["efrReference"]), 0.92334);
    }
    let limits: Vec<f64> = rows[1..].iter().map(|r| f(&r["upperLargeN"])).collect();
    assert!(limits.windows(2).all(|w| w[1] < w[0]), "{limits:?}");
    let e: Vec<f64> = rows[1..].iter().map(|r| f(&r["eulerELower"])).collect();
    assert!(e.iter().all(|&x| x == std::f64::consts::E));
}

#[test]
fn bounds_table_footer() {
    let o = capcover(&["bounds"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("ldiv upper constant: 0.11335772"), "{text}");
}

#[test]
fn verify_exit_codes() {
    assert_eq!(code(&capcover(&["verify", "--suite", "zone"])), 0);
    assert_eq!(code(&capcover(&["verify", "--suite", "cone"])), 0);
    // (1 - u)^k with k = 3/2 exceeds its quadratic bound near u = 1.
    let o = capcover(&["verify", "--suite", "scalar"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("failing k: [1.5]"));
    assert_eq!(code(&capcover(&["verify", "--suite", "nope"])), 2);
}

#[test]
fn verify_sidak_is_deterministic() {
    let args = ["verify", "--suite", "sidak", "--seed", "123", "--format", "json", "--omit-timing"];
    let a = capcover(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, capcover(&args).stdout);
}

#[test]
fn optimize_circle_reaches_disjoint_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.json");
    let q = dir.path().join("u.json");
    for out in [&p, &q] {
        let o = capcover(&[
            "optimize", "-d", "2", "-n", "8", "-a", "0.5", "--seed", "3", "--omit-timing", "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        assert!(String::from_utf8_lossy(&o.stdout).contains("theorem upper not applicable"));
    }
    assert_eq!(fs::read(&p).unwrap(), fs::read(&q).unwrap());
    let t = &json_file(&p)["result"]["trace"];
    assert!(f(&t["bestCoverage"]["mean"]) >= 0.4975);
}

#[test]
fn optimize_sphere_beats_random() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.json");
    let o = capcover(&["optimize", "-d", "3", "-n", "16", "-a", "1", "--seed", "8", "--out", p.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let t = &json_file(&p)["result"]["trace"];
    let best = &t["bestCoverage"];
    assert!(f(&best["mean"]) >= f(&t["randomBaseline"]) - 4.0 * f(&best["stdError"]));
    let h: Vec<f64> = t["objectiveHistory"].as_array().unwrap().iter().map(f).collect();
    assert!(h.windows(2).all(|w| w[1] >= w[0]));
}
