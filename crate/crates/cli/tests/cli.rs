use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn vfe(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vfe"))
        .args(args)
        .env("VFE_OUTPUT_ROOT", root)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|_| panic!("not JSON: {text}"))
}

const LINE: &[&str] = &[
    "--generator", "line", "--class", "spacelike", "--n", "32", "--ds", "0.1", "--dt", "0.01", "--steps", "10",
];

#[test]
fn line_simulate_then_verify_passes() {
    let root = tempfile::tempdir().unwrap();
    let mut args = vec!["simulate", "--name", "line"];
    args.extend(LINE);
    let out = vfe(&args, root.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = root.path().join("line");
    assert!(dir.join("manifest.json").exists());

    let out = vfe(&["verify", dir.to_str().unwrap()], root.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json_file(&dir.join("verify.json"));
    assert_eq!(v["pass"], true);
    for r in v["reports"].as_array().unwrap() {
        assert!(r["l2_norm"].as_f64().unwrap() <= 1e-12);
        assert!(r["linf_norm"].as_f64().unwrap() <= 1e-12);
    }
    assert!(dir.join("residuals.csv").exists());
}

#[test]
fn helix_converges_at_second_order() {
    let root = tempfile::tempdir().unwrap();
    let args = [
        "converge", "--name", "helix", "--generator", "timelike-helix", "--a", "1", "--omega", "1", "--n", "128", "--dt",
        "0.000602", "--steps", "10", "--levels", "3",
    ];
    let out = vfe(&args, root.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let c = json_file(&root.path().join("helix").join("converge.json"));
    assert_eq!(c["tables"][0]["quantity"], "nls");
    let order = c["tables"][0]["order"].as_f64().unwrap();
    assert!((order - 2.0).abs() <= 0.2, "{order}");
    for k in 0..3 {
        assert!(root.path().join("helix").join(format!("level_{k}")).join("manifest.json").exists());
    }
}

#[test]
fn truncated_run_is_a_structured_error() {
    let root = tempfile::tempdir().unwrap();
    let mut args = vec!["simulate", "--name", "cut"];
    args.extend(LINE);
    assert!(vfe(&args, root.path()).status.success());
    let dir = root.path().join("cut");
    std::fs::remove_file(dir.join("frame_00007.csv")).unwrap();
    let out = vfe(&["verify", dir.to_str().unwrap()], root.path());
    assert_ne!(out.status.code(), Some(0));
    let e = stderr_json(&out);
    assert_eq!(e["error"]["code"], "cli_runner.parse");
    assert!(e["error"]["message"].as_str().unwrap().contains("frame_00007.csv"));
}

#[test]
fn constraint_violation_exits_with_configuration_error() {
    let root = tempfile::tempdir().unwrap();
    let args = [
        "simulate", "--generator", "spacelike-helix", "--case", "spacelike-timelike-normal", "--b", "0.6", "--omega", "1",
        "--a", "0.9", "--n", "64",
    ];
    let out = vfe(&args, root.path());
    assert_eq!(out.status.code(), Some(2));
    let e = stderr_json(&out);
    assert_eq!(e["error"]["code"], "cli_runner.constraint_violation");
    assert!(e["error"]["message"].as_str().unwrap().contains("a^2 + b^2 omega^2 = 1"));
}

#[test]
fn failed_acceptance_exits_with_one() {
    let root = tempfile::tempdir().unwrap();
    let args = [
        "simulate", "--name", "h", "--generator", "timelike-helix", "--a", "1", "--omega", "1", "--n", "64", "--dt", "0.001",
        "--steps", "10",
    ];
    assert!(vfe(&args, root.path()).status.success());
    let dir = root.path().join("h");
    let out = vfe(&["verify", dir.to_str().unwrap(), "--residual-tol", "1e-12"], root.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_file(&dir.join("verify.json"))["pass"], false);
    let out = vfe(&["verify", dir.to_str().unwrap(), "--residual-tol", "0.05"], root.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn drift_is_a_numerical_failure() {
    let root = tempfile::tempdir().unwrap();
    let gen = ["generate", "--name", "seed", "--generator", "timelike-helix", "--a", "1", "--omega", "1", "--n", "64"];
    assert!(vfe(&gen, root.path()).status.success());
    let curve = root.path().join("seed").join("curve.csv");
    let args = [
        "simulate", "--generator", "from-file", "--path", curve.to_str().unwrap(), "--topology", "open", "--dt", "0.01",
        "--steps", "20", "--unit-speed-tol", "1e-6",
    ];
    let out = vfe(&args, root.path());
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"]["code"], "vfe_evolution.arc_length_drift");
}

#[test]
fn config_file_overrides_flags() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("run.toml");
    std::fs::write(
        &cfg,
        "name = \"from-file\"\n[generator]\nkind = \"circle\"\nn = 64\n[flow]\ndt = 0.001\nsteps = 8\n",
    )
    .unwrap();
    let args = ["simulate", "--config", cfg.to_str().unwrap(), "--name", "from-flags", "--n", "32", "--steps", "3"];
    let out = vfe(&args, root.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = json_file(&root.path().join("from-file").join("manifest.json"));
    assert_eq!(m["n"], 64);
    assert_eq!(m["snapshots"].as_array().unwrap().len(), 9);
    assert!(!root.path().join("from-flags").exists());
}

#[test]
fn identical_configs_give_identical_files() {
    let root = tempfile::tempdir().unwrap();
    let base = [
        "--generator", "spacelike-helix", "--case", "spacelike-timelike-binormal", "--b", "0.6", "--omega", "1", "--n", "64",
        "--dt", "0.0005", "--steps", "6",
    ];
    for name in ["a", "b"] {
        let mut args = vec!["simulate", "--name", name];
        args.extend(base);
        assert!(vfe(&args, root.path()).status.success());
        let out = vfe(&["verify", root.path().join(name).to_str().unwrap()], root.path());
        assert!(matches!(out.status.code(), Some(0 | 1)));
    }
    let mut names: Vec<_> = std::fs::read_dir(root.path().join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 10);
    for f in names {
        let a = std::fs::read(root.path().join("a").join(&f)).unwrap();
        let b = std::fs::read(root.path().join("b").join(&f)).unwrap();
        // The manifest records the run name, which differs.
        if f == "manifest.json" {
            let strip = |v: &[u8]| {
                let mut j: Value = serde_json::from_slice(v).unwrap();
                j["source"]["name"] = Value::Null;
                j
            };
            assert_eq!(strip(&a), strip(&b));
        } else {
            assert_eq!(a, b, "{f:?}");
        }
    }
}
