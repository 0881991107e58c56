use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_heisenberg-ibp");

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("HEISENBERG_IBP_WORKERS")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

const SMALL: [&str; 4] = ["--samples", "2000", "--steps", "64"];

fn small(extra: &[&str]) -> Vec<String> {
    SMALL.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn args(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

const ODD_INVERSION: &str = r#"
schema_version = 1
dim_w = 2
dim_c = 1
[omega]
mode = "standard"
[grid]
T = 1.0
steps = 32
[mc]
samples = 4000
seed = 3
[[experiment.inversion]]
f = { dim_w = 2, dim_c = 1, terms = [{ coeff = 1.0, atoms = [{ kind = "affine", lw = [1.0, -0.5], lc = [0.0] }] }] }
"#;

#[test]
fn partitions_of_five() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["partitions", "5"], dir.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# |Λ_5| = 51");
    assert_eq!(lines.len(), 52);
    assert_eq!(lines[1], "{1}{2}{3}{4}{5}");
    assert!(!lines.contains(&"{1,2,3,4,5}"));
    assert_eq!(code(&run(&["partitions", "0"], dir.path())), 2);
}

#[test]
fn odd_inversion_passes_with_echo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("odd.toml");
    fs::write(&cfg, ODD_INVERSION).unwrap();
    let out = dir.path().join("out");
    let o = run(&["--config", cfg.to_str().unwrap(), "verify", "inversion"], &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out.join("inversion_0.json"));
    assert_eq!(r["pass"], true);
    assert_eq!(r["mode"], "independent");
    assert_eq!(r["config"]["seed"], 3);
    assert_eq!(r["config"]["samples"], 4000);
    assert_eq!(r["config"]["source"]["grid"]["steps"], 32);
    assert!(out.join("config.echo.toml").exists());
}

#[test]
fn default_path_ibp_passes_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let v = small(&["--csv", "--json", "verify", "path-ibp"]);
    let o = run(&args(&v), dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r = read_json(&dir.path().join("path_ibp_0.json"));
    for key in ["identity", "lhs", "rhs", "difference", "combined_se", "tol_mult", "pass", "config", "alternate"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert_eq!(r["lhs"]["n_samples"], 2000);
    let csv = fs::read_to_string(dir.path().join("path_ibp.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    // Floats carry 17 significant digits.
    let text = fs::read_to_string(dir.path().join("path_ibp_0.json")).unwrap();
    assert!(text.contains("\"tol_mult\": 4.0000000000000000e0"), "{text}");
}

#[test]
fn echoed_config_reproduces_means_for_any_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    let v = small(&["--seed", "77", "verify", "group-ibp"]);
    assert_eq!(code(&run(&args(&v), &first)), 0);
    let echo = first.join("config.echo.toml");
    let second = dir.path().join("b");
    let o = Command::new(BIN)
        .args(["--config", echo.to_str().unwrap(), "verify", "group-ibp", "--out"])
        .arg(&second)
        .env("HEISENBERG_IBP_WORKERS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    for i in 0..2 {
        let a = read_json(&first.join(format!("group_ibp_{i}.json")));
        let b = read_json(&second.join(format!("group_ibp_{i}.json")));
        for side in ["lhs", "rhs"] {
            assert_eq!(a[side], b[side]);
        }
        assert_eq!(a["difference"], b["difference"]);
        assert_eq!(a["config"]["seed"], 77);
    }
}

#[test]
fn failed_verification_has_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad_target.toml");
    // f = c, h = (0, 0.8): both sides are 0.8, so 5.0 cannot be met.
    let text = ODD_INVERSION.replace(
        "[[experiment.inversion]]",
        "[[experiment.group_ibp]]\nhs = [{ w = [0.0, 0.0], c = [0.8] }]\ntarget = 5.0",
    )
    .replace("lw = [1.0, -0.5], lc = [0.0]", "lw = [0.0, 0.0], lc = [1.0]");
    fs::write(&cfg, text).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "verify", "group-ibp"], dir.path());
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("FAIL"));
}

#[test]
fn config_and_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = dir.path().join("unknown.toml");
    fs::write(&unknown, format!("{ODD_INVERSION}\n[extra]\nx = 1\n")).unwrap();
    let malformed = dir.path().join("malformed.toml");
    fs::write(&malformed, "schema_version = [").unwrap();
    let version = dir.path().join("version.toml");
    fs::write(&version, ODD_INVERSION.replace("schema_version = 1", "schema_version = 7")).unwrap();
    let tiny = dir.path().join("tiny.toml");
    fs::write(&tiny, ODD_INVERSION.replace("steps = 32", "steps = 1")).unwrap();
    for cfg in [&unknown, &malformed, &version, &tiny] {
        let o = run(&["--config", cfg.to_str().unwrap(), "verify", "inversion"], dir.path());
        assert_eq!(code(&o), 2, "{}", cfg.display());
        assert!(!o.stderr.is_empty());
    }
    let missing = dir.path().join("missing.toml");
    assert_eq!(code(&run(&["--config", missing.to_str().unwrap(), "verify", "inversion"], dir.path())), 3);
    assert_eq!(code(&run(&["--samples", "50", "verify", "inversion"], dir.path())), 2);
    let cfg = dir.path().join("odd.toml");
    fs::write(&cfg, ODD_INVERSION).unwrap();
    assert_eq!(code(&run(&["--config", cfg.to_str().unwrap(), "verify", "girsanov"], dir.path())), 2);
    assert_eq!(code(&run(&["verify", "nonsense"], dir.path())), 2);
}

#[test]
fn sample_moments_and_convergence_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let v = small(&["sample"]);
    assert_eq!(code(&run(&args(&v), dir.path())), 0);
    let csv = fs::read_to_string(dir.path().join("path_0.csv")).unwrap();
    assert_eq!(csv.lines().count(), 66);

    let v = small(&["--csv", "verify", "moments"]);
    let o = run(&args(&v), dir.path());
    assert!(matches!(code(&o), 0 | 1));
    let rows = fs::read_to_string(dir.path().join("moments.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 4 * 3);

    let v = ["--samples", "1000", "--steps", "8", "--csv", "--json", "convergence"];
    let o = run(&v, dir.path());
    assert!(matches!(code(&o), 0 | 1));
    let r = read_json(&dir.path().join("convergence_0.json"));
    assert_eq!(r["steps"], serde_json::json!([8, 16, 32]));
    let table = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
}
