use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use branchlab::config::ExperimentConfig;

fn branchlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_branchlab")).args(args).output().expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn parse_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect::<Vec<_>>();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse::<f64>().unwrap()).collect::<Vec<_>>()).collect::<Vec<_>>();
    assert!(rows.iter().all(|r| r.len() == header.len()));
    (header, rows)
}

fn assert_summary_shape(v: &serde_json::Value, name: &str) {
    assert_eq!(v["experiment"], name);
    assert!(v["config"].is_object());
    assert!(v["results"].is_object());
    for c in v["checks"].as_array().unwrap() {
        for key in ["name", "value", "tolerance", "pass"] {
            assert!(c.get(key).is_some(), "check lacks {key}");
        }
    }
}

#[test]
fn evolve_writes_descendant_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = branchlab(&["evolve", "--law", "binary", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = parse_csv(&dir.path().join("evolve.csv"));
    assert_eq!(header, ["n", "j", "mass"]);
    assert!(rows.contains(&vec![2.0, 0.0, 0.625]));
    for n in 0..=12 {
        let total: f64 = rows.iter().filter(|r| r[0] == n as f64).map(|r| r[2]).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }
    assert_summary_shape(&json(&dir.path().join("evolve.json")), "evolve");
}

#[test]
fn limit_matches_feller_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = branchlab(&[
        "limit",
        "--law",
        "binary",
        "--h",
        "0.0009765625",
        "--tau",
        "0.0009765625",
        "--q-grid",
        "1",
        "--t-grid",
        "2",
        "--out",
        d,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&dir.path().join("limit.json"));
    assert_summary_shape(&v, "limit");
    assert_eq!(v["results"]["closed_form"], 0.5);
    assert!((v["results"]["euler"].as_f64().unwrap() - 0.5).abs() <= 2e-3);
    assert!(v["results"]["gap"].as_f64().unwrap() <= 2e-3);
}

#[test]
fn universal_build_lists_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let out = branchlab(&["universal-build", "--c", "1", "--set", "k_max=4", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&dir.path().join("universal-build.json"));
    let heads = v["results"]["head_bounds"].as_array().unwrap();
    assert_eq!(heads.len(), 4);
    for (k, h) in heads.iter().enumerate() {
        assert!(h.as_f64().unwrap() < 1.0 / (k + 1) as f64);
    }
    let c: Vec<f64> = v["results"]["c_k"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    for (k, ck) in c.iter().enumerate() {
        let expect = (((k + 1) * (k + 1)) as f64).exp();
        assert!((ck - expect).abs() <= 1e-15 * expect);
    }
    assert_eq!(v["results"]["b_k"].as_array().unwrap().len(), 4);
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    fs::write(&cfg_path, "# limit run\nlaw = binary\nq_grid = 1\nt_grid = 2\ntol = 1e-12\n").unwrap();
    let d = dir.path().join("out");
    let out = branchlab(&["limit", "--config", cfg_path.to_str().unwrap(), "--out", d.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&d.join("limit.json"));
    assert_eq!(v["checks"][0]["pass"], false);
    assert_eq!(v["config"]["tol"], "1e-12");

    let echoed = ExperimentConfig::parse(
        &v["config"]
            .as_object()
            .unwrap()
            .iter()
            .map(|(k, x)| format!("{k} = {}\n", x.as_str().unwrap()))
            .collect::<String>(),
    )
    .unwrap();
    let mut expect = ExperimentConfig::parse(&fs::read_to_string(&cfg_path).unwrap()).unwrap();
    expect.experiment = "limit".into();
    expect.out = d.clone();
    assert_eq!(echoed, expect);

    let out = branchlab(&[
        "limit",
        "--config",
        cfg_path.to_str().unwrap(),
        "--set",
        "tol=0.01",
        "--out",
        d.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn exit_codes_for_bad_input() {
    assert_eq!(branchlab(&["bogus"]).status.code(), Some(1));
    assert_eq!(branchlab(&["evolve", "--law", "nope"]).status.code(), Some(1));
    assert_eq!(branchlab(&["evolve", "--law", "binary", "--weights", "0.5,0,0.5"]).status.code(), Some(1));
    assert_eq!(branchlab(&["limit", "--h", "0.1", "--c", "1"]).status.code(), Some(1));
    assert_eq!(branchlab(&["limit", "--q-grid", "log:1:0.1:3"]).status.code(), Some(1));
    assert_eq!(branchlab(&["evolve", "--config", "/nonexistent/branchlab.cfg"]).status.code(), Some(1));
    assert_eq!(branchlab(&["evolve", "--set", "frobnicate=1"]).status.code(), Some(1));
    assert_eq!(branchlab(&["verify", "no-such-criterion"]).status.code(), Some(1));
    assert_eq!(branchlab(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_reports_criteria() {
    let out = branchlab(&["verify", "euler-order"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("[PASS]"));
    assert!(text.contains("euler-order"));
    let out = branchlab(&["verify", "smol-identity"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn simulate_is_deterministic_for_a_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args =
        |d: &str| ["simulate", "--seed", "17", "--set", "n=4", "--set", "samples=200000", "--out", d].map(String::from);
    for d in [&a, &b] {
        let args = args(d.path().to_str().unwrap());
        let out = branchlab(&args.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(out.status.code(), Some(0));
    }
    let ca = fs::read(a.path().join("simulate.csv")).unwrap();
    assert_eq!(ca, fs::read(b.path().join("simulate.csv")).unwrap());
    let (_, rows) = parse_csv(&a.path().join("simulate.csv"));
    assert!(rows.iter().map(|r| r[2]).sum::<f64>() > 0.999);
    let other = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--seed",
        "18",
        "--set",
        "n=4",
        "--set",
        "samples=200000",
        "--out",
        other.path().to_str().unwrap(),
    ];
    assert_eq!(branchlab(&args).status.code(), Some(0));
    assert_ne!(ca, fs::read(other.path().join("simulate.csv")).unwrap());
}

#[test]
fn remaining_experiments_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cases: [&[&str]; 4] = [
        &["grimvall", "--h", "0.01", "--tau", "0.01"],
        &["smol-residual", "--law", "subcritical-demo", "--set", "n=5"],
        &["continuity", "--set", "n=8"],
        &["universal-demo", "--q-grid", "log:0.01:100:9", "--t-grid", "0.5,1"],
    ];
    for args in cases {
        let mut a = args.to_vec();
        a.extend(["--out", d]);
        let out = branchlab(&a);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stdout));
        let v = json(&dir.path().join(format!("{}.json", args[0])));
        assert_summary_shape(&v, args[0]);
        parse_csv(&dir.path().join(format!("{}.csv", args[0])));
    }
}

#[test]
fn output_independent_of_thread_count() {
    let mut files = Vec::new();
    for threads in ["1", "4"] {
        let dir = tempfile::tempdir().unwrap();
        let out = Command::new(env!("CARGO_BIN_EXE_branchlab"))
            .env("RAYON_NUM_THREADS", threads)
            .current_dir(dir.path())
            .args(["simulate", "--seed", "5", "--set", "n=5", "--set", "samples=300000", "--out", "."])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        files.push((
            fs::read(dir.path().join("simulate.csv")).unwrap(),
            fs::read(dir.path().join("simulate.json")).unwrap(),
        ));
    }
    assert_eq!(files[0], files[1]);
}
