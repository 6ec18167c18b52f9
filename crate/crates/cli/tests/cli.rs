use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fshe(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fshe"))
        .args(args)
        .current_dir(dir)
        .env_remove("FSHE_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

const ATOMS: &str = r#"
[model]
alpha = 1.0
u0 = { kind = "poly_decay", c0 = 1.0, decay = 0.5 }

[levy]
kind = "atoms"
atoms = [{ z = 1.0, mass = 1.0 }, { z = -1.0, mass = 1.0 }]

[run]
p = [1.0]
"#;

const SMALL_SIM: &str = r#"
[model]
alpha = 1.5

[grid]
half_width = 8.0
n_x = 64
horizon = 1.0
n_t = 50

[run]
p = [1.5]
replicas = 24
seed = 7
save_every = 5
etas = [0.0, 0.5, 1.0]

[renewal]
c3 = 0.5
c4 = 0.5
dt = 0.01
"#;

#[test]
fn bounds_on_atoms_example() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("atoms.toml"), ATOMS).unwrap();
    let out = fshe(dir.path(), &["--out-dir", "out", "bounds", "--config", "atoms.toml"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let b0 = v["reports"][0]["beta0"].as_f64().unwrap();
    assert!((b0 - 16.0).abs() < 1e-8, "beta0 = {b0}");
    assert!((v["reports"][0]["growth_upper"].as_f64().unwrap() - 32.0).abs() < 1e-7);
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(v["assumptions"][0], "k3 = 1 (configured, not derived)");
    let file = fs::read_to_string(dir.path().join("out/bounds.json")).unwrap();
    assert_eq!(file.trim_end(), String::from_utf8_lossy(&out.stdout).trim_end());
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = fshe(dir.path(), &["bounds", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = fshe(dir.path(), &["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_config_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "[grid]\nn_x = 100\n").unwrap();
    let out = fshe(dir.path(), &["moments", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid"));
    fs::write(dir.path().join("typo.toml"), "[levy]\nkind = \"atoms\"\natoms = [{ z = 1.0, mas = 1.0 }]\n").unwrap();
    let out = fshe(dir.path(), &["bounds", "--config", "typo.toml"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("levy"));
}

#[test]
fn specfun_prints_one_value_per_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = fshe(dir.path(), &["specfun", "eval", "--fn", "gamma", "--x", "5", "--x", "0.5"]);
    assert!(out.status.success());
    let lines: Vec<f64> = String::from_utf8_lossy(&out.stdout).lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(lines[0], 24.0);
    assert!((lines[1] - std::f64::consts::PI.sqrt()).abs() < 1e-15);
    let out = fshe(dir.path(), &["specfun", "eval", "--fn", "bessel-k", "--x", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

fn run_all(root: &Path, tag: &str) {
    let out_dir = format!("run_{tag}");
    for args in [
        vec!["simulate", "--config", "sim.toml", "--dump", "csv"],
        vec!["moments", "--config", "sim.toml"],
        vec!["growth-scan", "--config", "sim.toml"],
        vec!["renewal", "--config", "sim.toml"],
        vec!["bounds", "--config", "sim.toml"],
    ] {
        let mut full = vec!["--out-dir", out_dir.as_str()];
        full.extend(args.iter().copied());
        let out = fshe(root, &full);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn replays_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("sim.toml"), SMALL_SIM).unwrap();
    run_all(dir.path(), "a");
    run_all(dir.path(), "b");
    let a = dir.path().join("run_a");
    let mut n = 0;
    for entry in fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        let lhs = fs::read(a.join(&name)).unwrap();
        let rhs = fs::read(dir.path().join("run_b").join(&name)).unwrap();
        assert!(lhs == rhs, "{name:?} differs between replays");
        n += 1;
    }
    // 24 trajectories, 2 csv + 5 json reports, renewal.csv
    assert_eq!(n, 24 + 2 + 5 + 1);
    let header = fs::read_to_string(a.join("growth_scan_p1.5.csv")).unwrap();
    assert!(header.starts_with("eta,t,value,empty_flag\n"));
    let renewal = fs::read_to_string(a.join("renewal.csv")).unwrap();
    assert!(renewal.starts_with("t,f,exp_neg_beta1_t_f\n"));
}

#[test]
fn env_var_sets_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("atoms.toml"), ATOMS).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fshe"))
        .args(["bounds", "--config", "atoms.toml"])
        .current_dir(dir.path())
        .env("FSHE_OUTPUT_DIR", "from_env")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("from_env/bounds.json").exists());
}

#[test]
fn renewal_reads_a_moments_series() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("sim.toml"), SMALL_SIM).unwrap();
    let out = fshe(dir.path(), &["--out-dir", "o", "moments", "--config", "sim.toml"]);
    assert!(out.status.success());
    let out = fshe(dir.path(), &["--out-dir", "o", "renewal", "--config", "sim.toml", "--series", "o/moments_p1.5.csv"]);
    // exit 0 or 1 depending on the ordering; either way a full report is written
    assert!(matches!(out.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["check"]["times"].as_array().unwrap().len(), 11);
    assert_eq!(v["ordered_later"].as_bool().unwrap(), out.status.code() == Some(0));
}

#[test]
fn verify_lemmas_cauchy_case() {
    let dir = tempfile::tempdir().unwrap();
    let out = fshe(dir.path(), &["--out-dir", "o", "verify-lemmas", "--alpha", "1", "--d", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["passed"], true);
    for rec in v["records"].as_array().unwrap() {
        for key in ["lemma_id", "status", "worst_slack", "tolerance", "grid"] {
            assert!(rec.get(key).is_some(), "record lacks {key}");
        }
    }
}

#[test]
fn shipped_configs_run_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["atoms.toml", "intermittency.toml"] {
        let cfg = root.join(name);
        let out = fshe(dir.path(), &["--out-dir", "o", "bounds", "--config", cfg.to_str().unwrap()]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
