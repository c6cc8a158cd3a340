use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qnetcap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qnetcap")).args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(bytes)))
}

const TWO_NODES: &str = r#"{
  "nodes": [{"id": "a"}, {"id": "b"}],
  "edges": [{"a": "a", "b": "b", "channel": {"kind": "pl", "eta": 0.5}}],
  "users": ["a", "b"]
}"#;

#[test]
fn two_node_pure_loss_report() {
    let dir = TempDir::new().unwrap();
    let net = write(&dir, "net.json", TWO_NODES);
    let out = dir.path().join("report.json");
    let o = qnetcap(&["analyze", "--in", s(&net), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&fs::read(&out).unwrap());
    for key in ["single_path", "flooding", "min_neighbourhood"] {
        for end in ["lower", "upper"] {
            assert_eq!(r["capacities"][key][end], 1.0, "{key} {end}");
        }
    }
    assert_eq!(r["flooding"]["lower"]["mincut"]["A"], serde_json::json!(["a"]));
    assert_eq!(r["widest_path"]["upper"]["path"], serde_json::json!(["a", "b"]));
}

#[test]
fn missing_users_is_a_validation_failure() {
    let dir = TempDir::new().unwrap();
    let body = r#"{"nodes": [{"id": "a"}, {"id": "b"}], "edges": [{"a": "a", "b": "b", "channel": {"kind": "pl", "eta": 0.5}}]}"#;
    let net = write(&dir, "net.json", body);
    for cmd in ["analyze", "validate"] {
        let o = qnetcap(&[cmd, "--in", s(&net)]);
        assert_eq!(o.status.code(), Some(3), "{cmd}");
        let err = json(&o.stderr);
        assert_eq!(err["exit_code"], 3);
        assert!(err["violations"].as_array().unwrap().iter().any(|v| v.as_str().unwrap().starts_with("users: required")));
    }
}

#[test]
fn malformed_json_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let net = write(&dir, "net.json", r#"{"nodes": ["#);
    let o = qnetcap(&["analyze", "--in", s(&net)]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&o.stderr)["error"], "input");
    let o = qnetcap(&["analyze", "--in", s(&dir.path().join("absent.json"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn radius_one_is_rejected() {
    let o = qnetcap(&["generate", "--cell", "triangular6", "--radius", "1", "--d", "50"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn generate_validate_analyze_round_trip() {
    let dir = TempDir::new().unwrap();
    for (cell, k) in [("triangular6", 6.0), ("manhattan8", 8.0)] {
        for radius in ["2", "3", "4"] {
            let net = dir.path().join(format!("{cell}-{radius}.json"));
            let o = qnetcap(&["generate", "--cell", cell, "--radius", radius, "--d", "30", "--out", s(&net)]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            let o = qnetcap(&["validate", "--in", s(&net)]);
            assert!(o.status.success());
            assert_eq!(json(&o.stdout)["valid"], true);
            let o = qnetcap(&["analyze", "--in", s(&net)]);
            assert!(o.status.success());
            let r = json(&o.stdout);
            let flood = &r["capacities"]["flooding"];
            let single = r["capacities"]["single_path"]["lower"].as_f64().unwrap();
            // Homogeneous lattice: the users' own neighbourhoods are the bottleneck.
            assert!((flood["lower"].as_f64().unwrap() - k * single).abs() < 1e-9, "{cell} {radius}");
        }
    }
}

#[test]
fn ad_lattice_floods_at_k_times_the_edge() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "wrn.json", r#"{"cell": "triangular6", "family": "ad", "edge_length_km": 20, "recv": {"kind": "ad", "p": 0.1}}"#);
    let net = dir.path().join("net.json");
    assert!(qnetcap(&["generate", "--spec", s(&spec), "--out", s(&net)]).status.success());
    let r = json(&qnetcap(&["analyze", "--in", s(&net)]).stdout);
    assert_eq!(r["family"], "ad");
    let p_fibre = 1.0 - 10f64.powf(-0.02 * 20.0);
    let p_tot = qnetcap::channels::compose_ad(&[p_fibre, 0.1]).unwrap();
    let expected = 6.0 * qnetcap::bounds::ad_rci(p_tot).unwrap();
    let got = r["capacities"]["flooding"]["lower"].as_f64().unwrap();
    assert!((got - expected).abs() < 1e-9, "{got} {expected}");
}

#[test]
fn analyze_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let net = dir.path().join("net.json");
    assert!(qnetcap(&["generate", "--cell", "manhattan8", "--radius", "3", "--d", "40", "--out", s(&net)]).status.success());
    let again = dir.path().join("again.json");
    assert!(qnetcap(&["generate", "--cell", "manhattan8", "--radius", "3", "--d", "40", "--out", s(&again)]).status.success());
    assert_eq!(fs::read(&net).unwrap(), fs::read(&again).unwrap());
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        assert!(qnetcap(&["analyze", "--in", s(&net), "--out", s(out)]).status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn thermal_threshold_bracket() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "wrn.json", r#"{"cell": "manhattan8", "family": "tl", "nbar_b": 0.002}"#);
    let o = qnetcap(&["threshold", "--spec", s(&spec), "--target", "1e-2", "--param", "edge-length"]);
    assert!(o.status.success());
    let r = json(&o.stdout);
    assert_eq!(r["delta"], 32);
    let lo = r["bulk"]["bracket"][0].as_f64().unwrap();
    let hi = r["bulk"]["bracket"][1].as_f64().unwrap();
    assert!(91.0 < lo && lo < 92.0 && 125.0 < hi && hi < 126.0, "{lo} {hi}");
    assert_eq!(r["bulk"]["direction"], "maxTolerable");
    assert!(r["density"][0]["rho_min"].as_f64().unwrap() > r["density"][1]["rho_min"].as_f64().unwrap());
}

#[test]
fn pure_loss_threshold_collapses() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "wrn.json", r#"{"cell": "manhattan8", "family": "tl", "nbar_b": 0.0}"#);
    let r = json(&qnetcap(&["threshold", "--spec", s(&spec), "--target", "0.01"]).stdout);
    let [lo, hi] = [0, 1].map(|i| r["bulk"]["bracket"][i].as_f64().unwrap());
    assert_eq!(lo, hi);
    assert!((lo - 183.2186).abs() < 1e-3);
    assert!((r["density"][0]["rho_min"].as_f64().unwrap() - 5.96e-5).abs() < 1e-7);
}

#[test]
fn unreachable_target_exits_4() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "wrn.json", r#"{"cell": "manhattan8", "family": "ad", "recv": {"kind": "ad", "p": 0.9}}"#);
    let o = qnetcap(&["threshold", "--spec", s(&spec), "--target", "10"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(json(&o.stderr)["error"], "unattainable");
}

const SWEEP: &str = r#"{
  "variable": "targetCapacity",
  "range": {"start": 1e-3, "stop": 1, "steps": STEPS, "scale": "log"},
  "wrn": {"cell": "manhattan8", "family": "tl"}
}"#;

fn sweep(dir: &TempDir, steps: &str) -> (Output, String) {
    let spec = write(dir, "sweep.json", &SWEEP.replace("STEPS", steps));
    let out = dir.path().join(format!("out-{steps}.csv"));
    let o = qnetcap(&["sweep", "--spec", s(&spec), "--out", s(&out)]);
    (o, fs::read_to_string(&out).unwrap_or_default())
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn sweep_rows_and_header() {
    let dir = TempDir::new().unwrap();
    let (o, csv) = sweep(&dir, "2");
    assert!(o.status.success());
    assert!(csv.starts_with("# qnetcap sweep v1"));
    assert_eq!(csv.lines().nth(1), Some("targetCapacity,lower,upper,rho_min_lower,rho_min_upper"));
    assert_eq!(rows(&csv).len(), 2);

    let (_, csv) = sweep(&dir, "9");
    let r = rows(&csv);
    assert_eq!(r.len(), 9);
    for col in [1, 2] {
        let v: Vec<f64> = r.iter().map(|row| row[col].parse().unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]), "column {col} not decreasing: {v:?}");
    }
    let (_, again) = sweep(&dir, "9");
    assert_eq!(csv, again);
}

#[test]
fn sweep_rejects_bad_ranges() {
    let dir = TempDir::new().unwrap();
    let (o, _) = sweep(&dir, "1");
    assert_eq!(o.status.code(), Some(2));
    let spec = write(&dir, "bad.json", &SWEEP.replace("STEPS", "4").replace("1e-3", "-1"));
    assert_eq!(qnetcap(&["sweep", "--spec", s(&spec)]).status.code(), Some(2));
}

#[test]
fn tlo_noise_overtakes_tolerable_noise_first() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        &dir,
        "sweep.json",
        r#"{
          "variable": "edgeLength",
          "range": {"start": 5, "stop": 80, "steps": 16},
          "wrn": {"cell": "manhattan8", "family": "tl", "recv": {"kind": "tl", "tau": 1.0, "nbar": 0}},
          "target": 0.01,
          "solve": "receiverNoise",
          "compare_qkd": ["table1-heterodyne-llo", "table1-heterodyne-tlo"]
        }"#,
    );
    let o = qnetcap(&["sweep", "--spec", s(&spec)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.contains("nbar_r_table1-heterodyne-tlo"));
    // First length at which each receiver is noisier than the lower-bound tolerance.
    let crossing = |col: usize| {
        rows(&csv).iter().find_map(|r| {
            let tolerable: Option<f64> = r[1].parse().ok();
            let noise: f64 = r[col].parse().unwrap();
            (tolerable.is_none_or(|t| noise > t)).then(|| r[0].parse::<f64>().unwrap())
        })
    };
    let (llo, tlo) = (crossing(5), crossing(6));
    assert!(tlo.unwrap() < llo.unwrap_or(f64::INFINITY), "{tlo:?} {llo:?}");
}

#[test]
fn selftest_passes() {
    let o = qnetcap(&["selftest", "--seed", "11", "--cases", "60"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(json(&o.stdout)["failures"], serde_json::json!([]));
}
