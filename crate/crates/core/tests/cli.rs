//! End-to-end CLI tests: subcommands, exit codes, artifacts.

use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sigmaqc"))
}

fn write_config(dir: &std::path::Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_laminate_exits_zero_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "case = laminate\ngrids = 32, 64\n[checks]\nd_sigma_const = 0.02\nw_fields = 0.02\nharnack = 1.05\narea_identity = 1e-6\n",
    );
    let out_dir = dir.path().join("out");
    let output = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("result = PASS"), "{stdout}");
    assert!(stdout.contains("oracle d_sigma_const"), "{stdout}");
    let report = fs::read_to_string(out_dir.join("report.txt")).unwrap();
    assert_eq!(report, stdout);
}

#[test]
fn failing_check_exits_one_but_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "case = laminate\ngrids = 16\nout = OUTDIR\n[checks]\nd_sigma_const = 0\n"
            .replace("OUTDIR", dir.path().join("out").to_str().unwrap())
            .as_str(),
    );
    let output = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(1), "{output:?}");
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("d_sigma_const"), "{stderr}");
    let report = fs::read_to_string(dir.path().join("out/report.txt")).unwrap();
    assert!(report.contains("result = FAIL"));
}

#[test]
fn unknown_case_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "case = perforated\ngrids = 16\n");
    let output = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(2), "{output:?}");
    assert!(String::from_utf8(output.stderr).unwrap().contains("perforated"));
}

#[test]
fn malformed_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "case = identity\ngrids = 64, 32\n");
    let output = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(2), "{output:?}");
}

#[test]
fn missing_config_file_exits_two() {
    let output = bin()
        .args(["run", "--config", "/nonexistent/run.cfg"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "{output:?}");
}

#[test]
fn cases_lists_registry() {
    let output = bin().arg("cases").output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8(output.stdout).unwrap();
    for name in [
        "identity",
        "hypocycloid",
        "laminate",
        "constant_nonsymmetric",
        "smooth_detvarying",
        "kneser_rado_convex",
    ] {
        assert!(stdout.contains(name), "missing {name} in:\n{stdout}");
    }
    assert!(stdout.contains("a1 = 2"));
}

#[test]
fn export_prints_field_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "case = laminate\ngrids = 16\n");
    let output = bin()
        .args(["export", "--config"])
        .arg(&cfg)
        .args(["--field", "d_sigma"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next().unwrap(), "cx,cy,value");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    let v: f64 = first[2].parse().unwrap();
    assert!((v - 1.025).abs() < 1e-9, "{v}");
    // 16 x 16 cells, one consumed above
    assert_eq!(lines.count(), 255);
}

#[test]
fn export_unknown_field_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "case = identity\ngrids = 16\n");
    let output = bin()
        .args(["export", "--config"])
        .arg(&cfg)
        .args(["--field", "vorticity"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "{output:?}");
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("known fields"), "{stderr}");
}

#[test]
fn identical_runs_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "case = smooth_detvarying\ngrids = 32\n[params]\nlambda = 0.3\n[checks]\ndrift_bound = 1e-12\n",
    );
    let a = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    let b = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
