//! End-to-end tests of the binary: artifact layout, exit codes, overrides,
//! environment handling, and byte-identical reruns.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fracsde"));
    // isolate the tests from the caller's environment
    cmd.env_remove("FRACSDE_OUT_DIR");
    cmd
}

const GBM: &str = r#"
name = "gbm"
hurst = 0.75
horizon = 1.0
steps = 128
seed = 7
x0 = [1.0]

[coefficients]
family = "geometric-bm"
volatility = 0.5
"#;

fn write_scenario(dir: &Path, file: &str, body: &str) -> PathBuf {
    let path = dir.join(file);
    fs::write(&path, body).unwrap();
    path
}

fn run_ok(output: &Output) {
    assert!(
        output.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn solve_writes_all_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_scenario(tmp.path(), "gbm.toml", GBM);
    let out = tmp.path().join("artifacts");
    let output = bin().arg("solve").arg(&config).arg("--out-dir").arg(&out).output().unwrap();
    run_ok(&output);

    let dir = out.join("gbm").join("solve");
    for file in ["path.csv", "fbm.csv", "bm.csv", "reference.csv", "manifest.json"] {
        assert!(dir.join(file).exists(), "missing {file}");
    }
    // the CSV round-trips through the library reader
    let path = fracsde::SamplePath::read_csv_file(dir.join("path.csv")).unwrap();
    assert_eq!(path.grid().steps(), 128);
    assert_eq!(path.dim(), 1);
    // the manifest names every artifact except itself
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "solve");
    assert_eq!(manifest["scenario"]["name"], "gbm");
    let files: Vec<&str> =
        manifest["files"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(files, ["path.csv", "fbm.csv", "bm.csv", "reference.csv"]);
}

#[test]
fn reruns_are_byte_identical_outside_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_scenario(tmp.path(), "gbm.toml", GBM);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let output = bin().arg("solve").arg(&config).arg("--out-dir").arg(out).output().unwrap();
        run_ok(&output);
    }
    for file in ["path.csv", "fbm.csv", "bm.csv", "reference.csv"] {
        let left = fs::read(a.join("gbm/solve").join(file)).unwrap();
        let right = fs::read(b.join("gbm/solve").join(file)).unwrap();
        assert_eq!(left, right, "{file} differs between reruns");
    }
}

#[test]
fn seed_override_changes_the_draw() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_scenario(tmp.path(), "gbm.toml", GBM);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let output = bin().arg("gen-noise").arg(&config).arg("--out-dir").arg(&a).output().unwrap();
    run_ok(&output);
    let output = bin()
        .arg("gen-noise")
        .arg(&config)
        .arg("--out-dir")
        .arg(&b)
        .args(["--seed", "8"])
        .output()
        .unwrap();
    run_ok(&output);
    let left = fs::read(a.join("gbm/gen-noise/fbm.csv")).unwrap();
    let right = fs::read(b.join("gbm/gen-noise/fbm.csv")).unwrap();
    assert_ne!(left, right);
}

#[test]
fn steps_override_reshapes_the_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_scenario(tmp.path(), "gbm.toml", GBM);
    let out = tmp.path().join("artifacts");
    let output = bin()
        .arg("solve")
        .arg(&config)
        .arg("--out-dir")
        .arg(&out)
        .args(["-n", "64"])
        .output()
        .unwrap();
    run_ok(&output);
    let path = fracsde::SamplePath::read_csv_file(out.join("gbm/solve/path.csv")).unwrap();
    assert_eq!(path.grid().steps(), 64);
}

#[test]
fn env_var_sets_the_output_root_and_the_flag_wins() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_scenario(tmp.path(), "gbm.toml", GBM);
    let (env_root, flag_root) = (tmp.path().join("env"), tmp.path().join("flag"));
    let output = bin()
        .arg("gen-noise")
        .arg(&config)
        .env("FRACSDE_OUT_DIR", &env_root)
        .output()
        .unwrap();
    run_ok(&output);
    assert!(env_root.join("gbm/gen-noise/fbm.csv").exists());

    let output = bin()
        .arg("gen-noise")
        .arg(&config)
        .env("FRACSDE_OUT_DIR", &env_root)
        .arg("--out-dir")
        .arg(&flag_root)
        .output()
        .unwrap();
    run_ok(&output);
    assert!(flag_root.join("gbm/gen-noise/fbm.csv").exists());
}

#[test]
fn exit_codes_discriminate_usage_config_and_check_failures() {
    let tmp = tempfile::tempdir().unwrap();

    // unknown flag -> usage error
    let output = bin().arg("solve").arg("x.toml").arg("--bogus").output().unwrap();
    assert_eq!(output.status.code(), Some(64));

    // missing config -> validation error
    let output = bin().arg("solve").arg(tmp.path().join("missing.toml")).output().unwrap();
    assert_eq!(output.status.code(), Some(1));

    // out-of-range override -> validation error
    let config = write_scenario(tmp.path(), "gbm.toml", GBM);
    let output = bin()
        .arg("solve")
        .arg(&config)
        .args(["--alpha", "0.2"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));

    // an unreachable tolerance fails the check, which is not an error
    let out = tmp.path().join("artifacts");
    let output = bin()
        .arg("hoelder")
        .arg(&config)
        .arg("--out-dir")
        .arg(&out)
        .args(["-n", "512", "--paths", "2", "--window", "0.000001"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn validate_config_lists_every_problem() {
    let tmp = tempfile::tempdir().unwrap();
    let broken = GBM
        .replace("hurst = 0.75", "hurst = 0.4")
        .replace("steps = 128", "steps = 1");
    let config = write_scenario(tmp.path(), "broken.toml", &broken);
    let output = bin().arg("validate-config").arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("hurst"), "{stdout}");
    assert!(stdout.contains("steps"), "{stdout}");

    let config = write_scenario(tmp.path(), "good.toml", GBM);
    let output = bin().arg("validate-config").arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
}

#[test]
fn directory_configs_run_every_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let configs = tmp.path().join("configs");
    fs::create_dir(&configs).unwrap();
    write_scenario(&configs, "one.toml", GBM);
    write_scenario(&configs, "two.toml", &GBM.replace("name = \"gbm\"", "name = \"gbm2\""));
    let out = tmp.path().join("artifacts");
    let output = bin().arg("solve").arg(&configs).arg("--out-dir").arg(&out).output().unwrap();
    run_ok(&output);
    assert!(out.join("gbm/solve/path.csv").exists());
    assert!(out.join("gbm2/solve/path.csv").exists());
}

#[test]
fn graded_grids_flow_through_the_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let graded = GBM.replace(
        "[coefficients]",
        "[grid]\nkind = \"graded\"\ngamma = 2.0\n\n[coefficients]",
    );
    let config = write_scenario(tmp.path(), "graded.toml", &graded);
    let out = tmp.path().join("artifacts");
    let output = bin().arg("solve").arg(&config).arg("--out-dir").arg(&out).output().unwrap();
    run_ok(&output);
    let path = fracsde::SamplePath::read_csv_file(out.join("gbm/solve/path.csv")).unwrap();
    assert!(!path.grid().is_uniform());
}
