use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/mini/pipeline.toml")
}

fn colorbasis(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_colorbasis"))
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

#[test]
fn full_run_then_cached_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture_config();
    let first = colorbasis(&["run", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(dir.path().join("ranking.csv").is_file());
    assert!(dir.path().join("manifest.json").is_file());

    let second = colorbasis(&["run", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(second.status.success());
    let stdout = String::from_utf8_lossy(&second.stdout);
    assert!(stdout.lines().filter(|l| l.contains("rows")).all(|l| l.ends_with("(cached)")), "{stdout}");
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[compounds]\nthreshhold = 3\n").unwrap();
    let out = colorbasis(&["run", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("threshhold"));
}

#[test]
fn missing_upstream_artifact_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture_config();
    let out = colorbasis(&["gamma", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
