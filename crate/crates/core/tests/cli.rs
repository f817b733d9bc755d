//! End-to-end checks of the command-line runner: exit codes, validation
//! output and artifact layout.

use std::process::Command;

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_homlab")
}

#[test]
fn validate_accepts_good_config_and_rejects_bad() {
    let dir = std::env::temp_dir().join("homlab_cli_validate");
    std::fs::create_dir_all(&dir).unwrap();
    let good = dir.join("good.conf");
    std::fs::write(&good, "study = cell\ncoefficient.kind = two_phase_1d\ncell.n = 64\n").unwrap();
    let out = Command::new(binary()).args(["validate"]).arg(&good).output().unwrap();
    assert!(out.status.success(), "stdout: {}", String::from_utf8_lossy(&out.stdout));

    let bad = dir.join("bad.conf");
    std::fs::write(&bad, "study = cell\nnonsense = 1\nseedless = 2\n").unwrap();
    let out = Command::new(binary()).args(["validate"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    // every violated rule is enumerated
    assert!(err.contains("nonsense"), "{err}");
    assert!(err.contains("seedless"), "{err}");
}

#[test]
fn run_writes_artifacts_and_summary() {
    let dir = std::env::temp_dir().join("homlab_cli_run");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let conf = dir.join("cell.conf");
    std::fs::write(&conf, "study = cell\ncoefficient.kind = two_phase_1d\ncell.n = 128\n").unwrap();
    let out_dir = dir.join("artifacts");
    let out = Command::new(binary())
        .args(["run"])
        .arg(&conf)
        .args(["--out"])
        .arg(&out_dir)
        .args(["--threads", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for name in ["cell_correctors.csv", "summary.txt", "manifest.txt"] {
        assert!(out_dir.join(name).is_file(), "missing artifact {name}");
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("a_h[0][0]"), "{stdout}");

    // identical rerun produces byte-identical CSVs
    let first = std::fs::read(out_dir.join("cell_correctors.csv")).unwrap();
    let out2 = Command::new(binary()).args(["run"]).arg(&conf).args(["--out"]).arg(&out_dir).output().unwrap();
    assert!(out2.status.success());
    let second = std::fs::read(out_dir.join("cell_correctors.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn missing_config_file_fails_with_validation_exit_code() {
    let out = Command::new(binary()).args(["run", "/nonexistent/homlab.conf"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
