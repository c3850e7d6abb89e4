use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ris-e2e")).args(args).current_dir(cwd).output().unwrap()
}

const TINY_BASELINE: &str = r#"
config_version = 1
n_elements = 2
phase_source = "closed_form"
eb_n0_db = [0.0, 6.0]
min_errors = 20
max_bits = 4000
"#;

#[test]
fn baseline_run_writes_curve_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("b.toml"), TINY_BASELINE).unwrap();
    let out = cli(&["baseline", "--config", "b.toml", "--seed", "9", "--out", "run", "--desk-scale"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("run/ber_baseline.csv")).unwrap();
    assert!(csv.starts_with("eb_n0_db,bit_errors,total_bits,ber,ci_low,ci_high\n"));
    let manifest = fs::read_to_string(dir.path().join("run/manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 9"));

    fs::copy(dir.path().join("run/ber_baseline.csv"), dir.path().join("other.csv")).unwrap();
    let out = cli(&["compare", "run/ber_baseline.csv", "other.csv", "--out", "cmp"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("no crossings"));
    assert!(dir.path().join("cmp/comparison.csv").exists());
}

#[test]
fn validation_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("unknown.toml"), "config_version = 1\nfrobnicate = true\n").unwrap();
    fs::write(dir.path().join("unversioned.toml"), "n_elements = 4\n").unwrap();
    fs::write(dir.path().join("bad.toml"), "config_version = 1\nval_fraction = 2.0\n").unwrap();
    fs::write(dir.path().join("kind.toml"), "config_version = 1\nkind = \"ris_pretrain\"\n").unwrap();
    for args in [
        vec!["train", "--config", "unknown.toml"],
        vec!["train", "--config", "unversioned.toml"],
        vec!["train", "--config", "bad.toml"],
        vec!["baseline", "--config", "kind.toml"],
        vec!["train", "--config", "missing.toml"],
        vec!["eval", "--desk-scale"],
        vec!["frobnicate"],
        vec!["compare", "only-one.csv"],
    ] {
        let out = cli(&args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert!(!dir.path().join("runs").exists(), "validation must fail before any output is written");
}

#[test]
fn runtime_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("e.toml"),
        "config_version = 1\nphase_source = \"closed_form\"\nae_checkpoint = \"nowhere/ae\"\n",
    )
    .unwrap();
    let out = cli(&["eval", "--config", "e.toml", "--out", "run"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn help_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["pretrain-ris", "train", "eval", "baseline", "compare"] {
        assert!(text.contains(sub), "{sub}");
    }
}
